#include "vinesim/body.hpp"

#include "vinesim/error.hpp"
#include "vinesim/hash.hpp"

#include <algorithm>
#include <cmath>

namespace vinesim {

namespace {

// Faces are shrunk by this much so a tip resting on a surface is outside it.
constexpr double kSkin = 1e-9;

struct Hit {
    double t = 0.0;
    Vec3 normal = Vec3::Zero();
    std::string id;
    bool aperture_buckle = false;
};

void keep_earliest(std::optional<Hit>& best, std::optional<Hit> h)
{
    if (h && (!best || h->t < best->t)) best = std::move(h);
}

Vec3 to_local(const Pose3& pose, const Vec3& p) { return pose.orientation.conjugate() * (p - pose.position); }

// Slab test of segment a->b (local coordinates) against the box |x_i| < half_i.
// Returns the entry parameter and the local outward normal of the entry face.
std::optional<std::pair<double, Vec3>> slab_entry(const Vec3& a, const Vec3& b, const Vec3& half)
{
    const Vec3 d = b - a;
    double t_in = 0.0;
    double t_out = 1.0;
    int axis = -1;
    double sign = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double h = half[i] - kSkin;
        if (h <= 0.0) return std::nullopt;
        if (std::abs(d[i]) < 1e-15) {
            if (a[i] <= -h || a[i] >= h) return std::nullopt;
            continue;
        }
        double t1 = (-h - a[i]) / d[i];
        double t2 = (h - a[i]) / d[i];
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > t_in) {
            t_in = t1;
            axis = i;
            sign = d[i] > 0.0 ? -1.0 : 1.0;
        }
        t_out = std::min(t_out, t2);
        if (t_in >= t_out) return std::nullopt;
    }
    Vec3 n = Vec3::Zero();
    if (axis >= 0) {
        n[axis] = sign;
    } else {
        // Start point already inside: push out through the nearest face.
        double best = 1e300;
        for (int i = 0; i < 3; ++i) {
            for (double s : {-1.0, 1.0}) {
                const double gap = half[i] - s * a[i];
                if (gap < best) {
                    best = gap;
                    n = Vec3::Zero();
                    n[i] = s;
                }
            }
        }
    }
    return std::make_pair(t_in, n);
}

std::optional<Hit> hit_box(const Vec3& a, const Vec3& b, const Box& box, const std::string& id)
{
    auto e = slab_entry(to_local(box.pose, a), to_local(box.pose, b), box.extents / 2.0);
    if (!e) return std::nullopt;
    return Hit{e->first, box.pose.orientation * e->second, id, false};
}

std::optional<Hit> hit_aperture(const Vec3& a, const Vec3& b, const ApertureWall& wall, const std::string& id,
                                double diameter_cm)
{
    const Vec3 la = to_local(wall.pose, a);
    const Vec3 lb = to_local(wall.pose, b);
    auto e = slab_entry(la, lb, wall.extents / 2.0);
    if (!e) return std::nullopt;

    const double hw = wall.hole_width / 2.0;
    const double hh = wall.hole_height / 2.0;
    auto in_hole = [&](const Vec3& p) { return std::abs(p.x()) < hw && std::abs(p.y()) < hh; };

    const Vec3 entry = la + e->first * (lb - la);
    const bool body_fits =
        aperture_check(diameter_cm, 100.0 * std::min(wall.hole_width, wall.hole_height)) == ApertureResult::Pass;

    if (in_hole(entry)) {
        if (!body_fits) {
            return Hit{e->first, wall.pose.orientation * Vec3(0.0, 0.0, la.z() < 0.0 ? -1.0 : 1.0), id, true};
        }
        // Inside the passage; only the hole's side walls can stop the tip.
        const bool end_inside_wall = std::abs(lb.z()) < wall.extents.z() / 2.0;
        if (!end_inside_wall || in_hole(lb)) return std::nullopt;
        Vec3 n = Vec3::Zero();
        if (std::abs(lb.x()) >= hw) n.x() = lb.x() > 0.0 ? -1.0 : 1.0;
        else n.y() = lb.y() > 0.0 ? -1.0 : 1.0;
        return Hit{e->first, wall.pose.orientation * n, id, false};
    }
    return Hit{e->first, wall.pose.orientation * e->second, id, false};
}

std::optional<Hit> hit_bounds(const Vec3& a, const Vec3& b, const AlignedBox& bounds)
{
    std::optional<Hit> best;
    const Vec3 d = b - a;
    for (int i = 0; i < 3; ++i) {
        const double lo = bounds.min[i] + kSkin;
        const double hi = bounds.max[i] - kSkin;
        if (b[i] < lo && d[i] < 0.0) {
            Vec3 n = Vec3::Zero();
            n[i] = 1.0;
            keep_earliest(best, Hit{std::max(0.0, (lo - a[i]) / d[i]), n, "bounds", false});
        } else if (b[i] > hi && d[i] > 0.0) {
            Vec3 n = Vec3::Zero();
            n[i] = -1.0;
            keep_earliest(best, Hit{std::max(0.0, (hi - a[i]) / d[i]), n, "bounds", false});
        }
    }
    return best;
}

std::optional<Hit> first_hit(const Vec3& a, const Vec3& b, const Environment& env, double diameter_cm)
{
    std::optional<Hit> best = hit_bounds(a, b, env.bounds);
    for (const auto& ob : env.obstacles) {
        if (const auto* box = std::get_if<Box>(&ob.shape)) {
            keep_earliest(best, hit_box(a, b, *box, ob.id));
        } else if (const auto* tunnel = std::get_if<TunnelWalls>(&ob.shape)) {
            for (const auto& w : tunnel->walls) keep_earliest(best, hit_box(a, b, w, ob.id));
        } else if (const auto* wall = std::get_if<ApertureWall>(&ob.shape)) {
            keep_earliest(best, hit_aperture(a, b, *wall, ob.id, diameter_cm));
        }
    }
    return best;
}

bool contains_id(const std::vector<std::string>& v, const std::string& id)
{
    return std::find(v.begin(), v.end(), id) != v.end();
}

Vec3 horizontal(const Vec3& v, const Vec3& up) { return v - v.dot(up) * up; }

}  // namespace

bool Box::contains(const Vec3& p, double margin) const
{
    const Vec3 l = to_local(pose, p);
    for (int i = 0; i < 3; ++i)
        if (std::abs(l[i]) > extents[i] / 2.0 + margin) return false;
    return true;
}

bool AlignedBox::contains(const Vec3& p) const
{
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

const Obstacle* Environment::find(const std::string& id) const
{
    for (const auto& o : obstacles)
        if (o.id == id) return &o;
    return nullptr;
}

const char* to_string(EventKind k)
{
    switch (k) {
    case EventKind::ApertureBuckle: return "aperture_buckle";
    case EventKind::CylinderToppled: return "cylinder_toppled";
    case EventKind::RetractionBuckle: return "retraction_buckle";
    case EventKind::GoalReached: return "goal_reached";
    case EventKind::ContactSlide: return "contact_slide";
    case EventKind::Saturated: return "saturated";
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(const std::string& s)
{
    for (auto k : {EventKind::ApertureBuckle, EventKind::CylinderToppled, EventKind::RetractionBuckle,
                   EventKind::GoalReached, EventKind::ContactSlide, EventKind::Saturated})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

void BodyConfig::validate() const
{
    layout.validate();
    for (double v : {l_ctrl, inflated_diameter, body_length, kappa_retract, retract_window, curvature_baseline,
                     freeze_spacing})
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("body configuration values must be positive");
}

bool LaidPose::operator==(const LaidPose& o) const
{
    return s == o.s && pose.position == o.pose.position && pose.orientation.coeffs() == o.pose.orientation.coeffs();
}

namespace {

std::uint64_t hash_pose(std::uint64_t seed, const LaidPose& lp)
{
    Fnv1a h(seed);
    const auto& p = lp.pose.position;
    const auto& q = lp.pose.orientation;
    h.add(p.x()).add(p.y()).add(p.z()).add(q.w()).add(q.x()).add(q.y()).add(q.z()).add(lp.s);
    return h.value();
}

}  // namespace

BodyState BodyState::at(const Pose3& base, const BodyConfig& cfg)
{
    BodyState b;
    b.laid.push_back({base, 0.0});
    b.inflated_diameter = cfg.inflated_diameter;
    b.l_ctrl = cfg.l_ctrl;
    b.rehash_laid();
    return b;
}

void BodyState::append_laid(const Pose3& pose)
{
    const LaidPose& last = laid.back();
    LaidPose lp{pose, last.s + (pose.position - last.pose.position).norm()};
    laid_digest = hash_pose(laid_digest, lp);
    laid.push_back(std::move(lp));
}

void BodyState::rehash_laid()
{
    laid_digest = Fnv1a::kOffset;
    for (const auto& lp : laid) laid_digest = hash_pose(laid_digest, lp);
}

WorldState WorldState::for_environment(const Environment& env)
{
    WorldState w;
    w.cylinders.resize(env.obstacles.size());
    return w;
}

ApertureResult aperture_check(double inflated_diameter, double hole_side)
{
    if (!(inflated_diameter > 0.0) || !(hole_side > 0.0))
        throw InvalidInput("aperture check needs positive diameter and hole side");
    return hole_side >= kShrinkRatio * inflated_diameter ? ApertureResult::Pass : ApertureResult::Buckle;
}

Vec3 collide_slide(const Vec3& motion, const Vec3& contact_normal)
{
    const double into = motion.dot(contact_normal);
    if (into >= 0.0) return motion;
    return motion - into * contact_normal;
}

CylinderInteraction cylinder_interaction(const Vec3& from, const Vec3& to, const UnstableCylinder& cyl,
                                         const Vec3& up)
{
    CylinderInteraction out;
    const Vec3 d = to - from;
    const Vec3 rel_h = horizontal(from - cyl.center, up);
    const Vec3 d_h = horizontal(d, up);
    double t = 0.0;
    const double dd = d_h.squaredNorm();
    if (dd > 0.0) t = std::clamp(-rel_h.dot(d_h) / dd, 0.0, 1.0);

    const Vec3 closest = from + t * d;
    const double height = (closest - cyl.center).dot(up);
    if (height < 0.0 || height > cyl.height) return out;

    const Vec3 offset = horizontal(cyl.center - closest, up);
    const double dist = offset.norm();
    const double pen = cyl.radius - dist;
    if (pen <= 0.0) return out;

    out.penetration = pen;
    if (dist > 1e-12)
        out.push_dir = offset / dist;
    else if (dd > 0.0)
        out.push_dir = d_h.normalized();
    else
        out.push_dir = horizontal(Vec3::UnitX(), up).normalized();
    out.contact = pen > cyl.topple_tolerance ? CylinderContact::Topple : CylinderContact::Slide;
    return out;
}

double polyline_length(const std::vector<LaidPose>& laid)
{
    double len = 0.0;
    for (std::size_t i = 1; i < laid.size(); ++i) len += (laid[i].pose.position - laid[i - 1].pose.position).norm();
    return len;
}

double distal_laid_curvature(const BodyState& state, double window, double baseline)
{
    const auto& laid = state.laid;
    const double start = state.laid_length() - window;
    double worst = 0.0;
    std::size_t j = laid.size() - 1;
    for (std::size_t i = laid.size(); i-- > 0;) {
        if (laid[i].s < start) break;
        // j trails behind i, keeping the smallest index with s_j - s_i >= baseline.
        while (j > i + 1 && laid[j - 1].s - laid[i].s >= baseline) --j;
        if (j <= i || laid[j].s - laid[i].s < baseline) continue;
        const Vec3 ti = laid[i].pose.tangent();
        const Vec3 tj = laid[j].pose.tangent();
        const double angle = std::atan2(ti.cross(tj).norm(), ti.dot(tj));
        worst = std::max(worst, angle / (laid[j].s - laid[i].s));
    }
    return worst;
}

std::vector<Event> retract(BodyState& state, const BodyConfig& cfg, double dL, bool* buckled)
{
    if (!(dL > 0.0) || !std::isfinite(dL)) throw InvalidInput("retraction length must be positive");
    std::vector<Event> events;
    if (buckled) *buckled = false;

    if (distal_laid_curvature(state, cfg.retract_window, cfg.curvature_baseline) > cfg.kappa_retract) {
        if (buckled) *buckled = true;
        events.push_back({EventKind::RetractionBuckle, "", 0, camera_pose(state).position});
        return events;
    }

    double remaining = std::min(dL, state.total_length);
    if (remaining <= state.active.s) {
        state.active.s -= remaining;
        if (state.active.s <= 0.0) state.active = {};
    } else {
        remaining -= state.active.s;
        state.active = {};
        const double cut = std::max(0.0, state.laid_length() - remaining);
        std::optional<LaidPose> removed;
        while (state.laid.size() > 1 && state.laid.back().s > cut) {
            removed = state.laid.back();
            state.laid.pop_back();
        }
        const LaidPose& last = state.laid.back();
        if (removed && last.s < cut) {
            const double f = (cut - last.s) / (removed->s - last.s);
            LaidPose mid;
            mid.pose.position = last.pose.position + f * (removed->pose.position - last.pose.position);
            mid.pose.orientation = last.pose.orientation.slerp(f, removed->pose.orientation).normalized();
            mid.s = last.s + (mid.pose.position - last.pose.position).norm();
            state.laid.push_back(mid);
        }
        state.rehash_laid();
    }
    state.total_length = state.laid_length() + state.active.s;
    return events;
}

Pose3 camera_pose(const BodyState& state) { return arc_pose_at(state.active_base(), state.active, state.active.s); }

std::vector<Vec3> backbone_polyline(const BodyState& state, int arc_points)
{
    std::vector<Vec3> out;
    out.reserve(state.laid.size() + static_cast<std::size_t>(std::max(arc_points, 0)));
    for (const auto& lp : state.laid) out.push_back(lp.pose.position);
    if (state.active.s > 0.0 && arc_points >= 1) {
        for (int i = 1; i <= arc_points; ++i)
            out.push_back(arc_pose_at(state.active_base(), state.active, state.active.s * i / arc_points).position);
    }
    return out;
}

std::vector<Event> step(SimState& st, const Environment& env, const BodyConfig& cfg, const PressureCommand& steering,
                        double growth, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
    if (!std::isfinite(growth)) throw InvalidInput("growth rate is not finite");
    const double dL = growth * 0.01 * dt;
    if (std::abs(dL) > 0.1 * cfg.l_ctrl) throw InvalidInput("tick too long for the growth rate");

    BodyState& body = st.body;
    WorldState& world = st.world;
    if (world.cylinders.size() != env.obstacles.size()) world.cylinders.resize(env.obstacles.size());
    std::vector<Event> events;
    auto emit = [&](EventKind k, std::string id, const Vec3& pos) {
        events.push_back({k, std::move(id), st.tick, pos});
    };

    double ds = 0.0;
    if (dL < 0.0) {
        bool buckled = false;
        retract(body, cfg, -dL, &buckled);
        if (buckled && !world.retract_blocked) emit(EventKind::RetractionBuckle, "", camera_pose(body).position);
        world.retract_blocked = buckled;
    } else {
        world.retract_blocked = false;
        ds = std::min(dL, std::max(0.0, cfg.body_length - body.total_length));
    }

    const Vec3 old_tip = camera_pose(body).position;
    const Pose3 base = body.active_base();
    const double s_new = body.active.s + ds;

    // Commanded arc from the actuator superposition.
    ArcParams arc{0.0, 0.0, s_new};
    world.reach_clamped = false;
    if (s_new > 0.0) {
        TipPosition offset = superpose_tip(steering, cfg.layout);
        const double reach = max_lateral_reach(s_new) * (1.0 - 1e-9);
        if (offset.norm() > reach) {
            const double k = reach / offset.norm();
            offset = {offset.x * k, offset.y * k};
            world.reach_clamped = true;
        }
        arc = tip_to_arc(offset, s_new);
    }
    const Vec3 wanted = arc_pose_at(base, arc, s_new).position;

    // Tip-only contact: slide the tip motion along whatever it runs into.
    Vec3 target = wanted;
    bool contact = false;
    std::string contact_id;
    bool resolved = false;
    for (int iter = 0; iter < 4; ++iter) {
        auto hit = first_hit(old_tip, target, env, body.inflated_diameter);
        if (!hit) {
            resolved = true;
            break;
        }
        contact = true;
        contact_id = hit->id;
        if (hit->aperture_buckle) {
            if (!contains_id(world.apertures_blocked, hit->id)) {
                world.apertures_blocked.push_back(hit->id);
                emit(EventKind::ApertureBuckle, hit->id, old_tip);
            }
        }
        target = old_tip + collide_slide(target - old_tip, hit->normal);
        if ((target - old_tip).norm() < 1e-12) {
            target = old_tip;
            resolved = true;
            break;
        }
    }
    if (!resolved) target = old_tip;

    if (contact) {
        auto fits = [&](const Vec3& p, ArcParams& out) {
            return arc_through_point(base, p, out) && out.kappa * out.s <= kMaxInvertibleBend &&
                   out.s <= s_new + 1e-12;
        };
        ArcParams adjusted;
        if (fits(target, adjusted)) {
            arc = adjusted;
        } else {
            // Shorten the slide until the arc through the tip uses no more
            // material than is available this tick.
            double lo = 0.0;
            double hi = 1.0;
            ArcParams best = body.active;
            for (int i = 0; i < 40; ++i) {
                const double mid = 0.5 * (lo + hi);
                ArcParams trial;
                if (fits(old_tip + mid * (target - old_tip), trial)) {
                    lo = mid;
                    best = trial;
                } else {
                    hi = mid;
                }
            }
            arc = best;
        }
        if (!(arc.s > 0.0)) arc = {};
    }

    const Vec3 new_tip = arc_pose_at(base, arc, arc.s).position;
    if (contact && !world.in_contact) emit(EventKind::ContactSlide, contact_id, new_tip);
    world.in_contact = contact;

    // Unstable cylinders are pushed, never block.
    const Vec3 up = -env.gravity_dir.normalized();
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
        const auto* cyl = std::get_if<UnstableCylinder>(&env.obstacles[i].shape);
        if (!cyl) continue;
        CylinderState& cs = world.cylinders[i];
        if (cs.toppled) continue;
        UnstableCylinder current = *cyl;
        current.center += cs.offset;
        current.topple_tolerance = cyl->topple_tolerance - cs.pushed;
        const auto r = cylinder_interaction(old_tip, new_tip, current, up);
        if (r.contact == CylinderContact::Topple) {
            cs.toppled = true;
            emit(EventKind::CylinderToppled, env.obstacles[i].id, new_tip);
        } else if (r.contact == CylinderContact::Slide) {
            cs.offset += r.push_dir * r.penetration;
            cs.pushed += r.penetration;
            if (!cs.touched) emit(EventKind::ContactSlide, env.obstacles[i].id, new_tip);
            cs.touched = true;
        }
    }

    for (const auto& ob : env.obstacles) {
        const auto* goal = std::get_if<Goal>(&ob.shape);
        if (goal && !contains_id(world.goals_reached, ob.id) && goal->box.contains(new_tip)) {
            world.goals_reached.push_back(ob.id);
            emit(EventKind::GoalReached, ob.id, new_tip);
        }
    }

    // Freeze whatever exceeds the steerable length onto the laid path.
    body.active = arc;
    if (arc.s > cfg.l_ctrl) {
        const double excess = arc.s - cfg.l_ctrl;
        const int pieces = std::max(1, static_cast<int>(std::ceil(excess / cfg.freeze_spacing)));
        for (int j = 1; j <= pieces; ++j) body.append_laid(arc_pose_at(base, arc, excess * j / pieces));
        body.active.s = cfg.l_ctrl;
    }
    if (body.active.s <= 0.0) body.active = {};
    body.total_length = body.laid_length() + body.active.s;
    return events;
}

std::uint64_t state_digest(const SimState& st)
{
    Fnv1a h;
    const BodyState& b = st.body;
    h.add(st.tick).add(b.laid_digest).add(static_cast<std::uint64_t>(b.laid.size()));
    h.add(b.active.kappa).add(b.active.phi).add(b.active.s).add(b.total_length);
    for (const auto& c : st.world.cylinders) h.add(c.offset.x()).add(c.offset.y()).add(c.offset.z()).add(c.pushed).add(c.toppled);
    for (const auto& g : st.world.goals_reached) h.add(g);
    h.add(st.world.in_contact).add(st.world.retract_blocked);
    return h.value();
}

}  // namespace vinesim
