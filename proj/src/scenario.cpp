#include "vinesim/scenario.hpp"

#include "vinesim/error.hpp"
#include "vinesim/hash.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace vinesim {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Robot and aperture frames grow/face along local +z internally but along
// +x in the file.
const Eigen::Quaterniond kFaceX(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()));

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

const json& need(const json& j, const char* key, const std::string& path)
{
    if (!j.is_object()) throw ParseError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(child(path, key), "missing");
    return *it;
}

double number(const json& v, const std::string& path)
{
    if (!v.is_number()) throw ParseError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(path, "not finite");
    return d;
}

double number(const json& j, const char* key, const std::string& path) { return number(need(j, key, path), child(path, key)); }

double number_or(const json& j, const char* key, double fallback, const std::string& path)
{
    if (!j.contains(key)) return fallback;
    return number(j.at(key), child(path, key));
}

bool bool_or(const json& j, const char* key, bool fallback, const std::string& path)
{
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ParseError(child(path, key), "expected a boolean");
    return j.at(key).get<bool>();
}

std::string string_of(const json& v, const std::string& path)
{
    if (!v.is_string()) throw ParseError(path, "expected a string");
    return v.get<std::string>();
}

std::string string_or(const json& j, const char* key, const std::string& fallback, const std::string& path)
{
    if (!j.contains(key)) return fallback;
    return string_of(j.at(key), child(path, key));
}

Vec3 vec3(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) throw ParseError(path, "expected [x, y, z]");
    return {number(v[0], child(path, 0)), number(v[1], child(path, 1)), number(v[2], child(path, 2))};
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Quaterniond rotation(const json& p, const std::string& path)
{
    if (p.contains("quat")) {
        const auto& q = p.at("quat");
        const std::string qp = child(path, "quat");
        if (!q.is_array() || q.size() != 4) throw ParseError(qp, "expected [w, x, y, z]");
        Eigen::Quaterniond r(number(q[0], child(qp, 0)), number(q[1], child(qp, 1)), number(q[2], child(qp, 2)),
                             number(q[3], child(qp, 3)));
        if (r.norm() < 1e-12) throw ParseError(qp, "zero quaternion");
        return r.normalized();
    }
    return rotation_from_degrees(number_or(p, "yaw", 0.0, path), number_or(p, "pitch", 0.0, path),
                                 number_or(p, "roll", 0.0, path));
}

Pose3 pose(const json& p, const std::string& path, bool faces_x)
{
    if (!p.is_object()) throw ParseError(path, "expected a pose object");
    Pose3 out;
    out.position = vec3(need(p, "position", path), child(path, "position"));
    out.orientation = rotation(p, path);
    if (faces_x) out.orientation = (out.orientation * kFaceX).normalized();
    return out;
}

json pose_json(const Pose3& p, bool faces_x)
{
    const Eigen::Quaterniond q = faces_x ? p.orientation * kFaceX.conjugate() : p.orientation;
    const Eigen::Matrix3d r = q.toRotationMatrix();
    const double pitch = std::asin(std::clamp(r(2, 0), -1.0, 1.0));
    const double yaw = std::atan2(r(1, 0), r(0, 0));
    const double roll = std::atan2(r(2, 1), r(2, 2));
    json out{{"position", vec_json(p.position)}};
    auto put = [&](const char* k, double rad) {
        if (std::abs(rad) > 1e-15) out[k] = rad / kDeg;
    };
    put("yaw", yaw);
    put("pitch", pitch);
    put("roll", roll);
    return out;
}

// Boxes accept either pose + extents or axis-aligned min/max corners.
Box box(const json& j, const std::string& path)
{
    Box b;
    if (j.contains("min") || j.contains("max")) {
        const Vec3 lo = vec3(need(j, "min", path), child(path, "min"));
        const Vec3 hi = vec3(need(j, "max", path), child(path, "max"));
        b.pose.position = 0.5 * (lo + hi);
        b.extents = hi - lo;
    } else {
        b.pose = pose(need(j, "pose", path), child(path, "pose"), false);
        b.extents = vec3(need(j, "extents", path), child(path, "extents"));
    }
    return b;
}

json box_json(const Box& b) { return {{"pose", pose_json(b.pose, false)}, {"extents", vec_json(b.extents)}}; }

Obstacle obstacle(const json& j, const std::string& path)
{
    Obstacle ob;
    ob.id = string_of(need(j, "id", path), child(path, "id"));
    ob.estimated = bool_or(j, "estimated", false, path);
    const std::string type = string_of(need(j, "type", path), child(path, "type"));
    if (type == "box") {
        ob.shape = box(j, path);
    } else if (type == "cylinder") {
        UnstableCylinder c;
        c.center = vec3(need(j, "center", path), child(path, "center"));
        c.radius = number(j, "radius", path);
        c.height = number(j, "height", path);
        c.topple_tolerance = number(j, "topple_tolerance", path);
        ob.shape = c;
    } else if (type == "aperture") {
        // File frame: x is the wall normal, y across, z up. Internally the
        // wall normal is local z and local x points down the file's z.
        ApertureWall w;
        w.pose = pose(need(j, "pose", path), child(path, "pose"), true);
        const double thickness = number(j, "thickness", path);
        const double width = number(j, "width", path);
        const double height = number(j, "height", path);
        w.extents = Vec3(height, width, thickness);
        const auto& hole = need(j, "hole", path);
        const std::string hp = child(path, "hole");
        if (!hole.is_array() || hole.size() != 2) throw ParseError(hp, "expected [width, height]");
        w.hole_height = number(hole[0], child(hp, 0));
        w.hole_width = number(hole[1], child(hp, 1));
        ob.shape = w;
    } else if (type == "sand") {
        ob.shape = SandRegion{box(j, path)};
    } else if (type == "goal") {
        ob.shape = Goal{box(j, path)};
    } else if (type == "tunnel") {
        const auto& walls = need(j, "walls", path);
        const std::string wp = child(path, "walls");
        if (!walls.is_array()) throw ParseError(wp, "expected an array");
        TunnelWalls t;
        for (std::size_t i = 0; i < walls.size(); ++i) t.walls.push_back(box(walls[i], child(wp, i)));
        ob.shape = t;
    } else {
        throw ParseError(child(path, "type"), "unknown obstacle type '" + type + "'");
    }
    return ob;
}

json obstacle_json(const Obstacle& ob)
{
    json j;
    if (const auto* b = std::get_if<Box>(&ob.shape)) {
        j = box_json(*b);
        j["type"] = "box";
    } else if (const auto* c = std::get_if<UnstableCylinder>(&ob.shape)) {
        j = {{"type", "cylinder"}, {"center", vec_json(c->center)}, {"radius", c->radius}, {"height", c->height},
             {"topple_tolerance", c->topple_tolerance}};
    } else if (const auto* w = std::get_if<ApertureWall>(&ob.shape)) {
        j = {{"type", "aperture"},
             {"pose", pose_json(w->pose, true)},
             {"thickness", w->extents.z()},
             {"width", w->extents.y()},
             {"height", w->extents.x()},
             {"hole", json::array({w->hole_height, w->hole_width})}};
    } else if (const auto* s = std::get_if<SandRegion>(&ob.shape)) {
        j = box_json(s->box);
        j["type"] = "sand";
    } else if (const auto* g = std::get_if<Goal>(&ob.shape)) {
        j = box_json(g->box);
        j["type"] = "goal";
    } else if (const auto* t = std::get_if<TunnelWalls>(&ob.shape)) {
        j = {{"type", "tunnel"}, {"walls", json::array()}};
        for (const auto& w : t->walls) j["walls"].push_back(box_json(w));
    }
    j["id"] = ob.id;
    if (ob.estimated) j["estimated"] = true;
    return j;
}

GrowthConfig growth_config(const json& j, const std::string& path)
{
    GrowthConfig g;
    if (!j.is_object()) throw ParseError(path, "expected an object");
    static const std::set<std::string> known = {"adc_max", "c_p", "r_p0", "c_m", "r_m0", "k_p",
                                                "k_i", "p_grow", "p_body_max", "q_max", "body_radius", "v_max",
                                                "coulomb_u", "spool_radius", "u_max", "motor_gain", "motor_tau"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ParseError(child(path, k), "unknown growth parameter");
    g.adc_max = number_or(j, "adc_max", g.adc_max, path);
    g.c_p = number_or(j, "c_p", g.c_p, path);
    g.r_p0 = number_or(j, "r_p0", g.r_p0, path);
    g.c_m = number_or(j, "c_m", g.c_m, path);
    g.r_m0 = number_or(j, "r_m0", g.r_m0, path);
    g.k_p = number_or(j, "k_p", g.k_p, path);
    g.k_i = number_or(j, "k_i", g.k_i, path);
    g.p_grow = number_or(j, "p_grow", g.p_grow, path);
    g.p_body_max = number_or(j, "p_body_max", g.p_body_max, path);
    g.q_max = number_or(j, "q_max", g.q_max, path);
    g.body_radius = number_or(j, "body_radius", g.body_radius, path);
    g.v_max = number_or(j, "v_max", g.v_max, path);
    g.coulomb_u = number_or(j, "coulomb_u", g.coulomb_u, path);
    g.spool_radius = number_or(j, "spool_radius", g.spool_radius, path);
    g.u_max = number_or(j, "u_max", g.u_max, path);
    g.motor_gain = number_or(j, "motor_gain", g.motor_gain, path);
    g.motor_tau = number_or(j, "motor_tau", g.motor_tau, path);
    return g;
}

json growth_json(const GrowthConfig& g)
{
    return {{"adc_max", g.adc_max}, {"c_p", g.c_p},
            {"r_p0", g.r_p0},       {"c_m", g.c_m},
            {"r_m0", g.r_m0},       {"k_p", g.k_p},
            {"k_i", g.k_i},         {"p_grow", g.p_grow},
            {"p_body_max", g.p_body_max}, {"q_max", g.q_max},
            {"body_radius", g.body_radius}, {"v_max", g.v_max},
            {"coulomb_u", g.coulomb_u}, {"spool_radius", g.spool_radius},
            {"u_max", g.u_max},     {"motor_gain", g.motor_gain},
            {"motor_tau", g.motor_tau}};
}

RobotConfig robot_config(const json& j, const std::string& path, std::vector<Location>& locations)
{
    RobotConfig r;
    if (!j.is_object()) throw ParseError(path, "expected an object");
    r.inflated_diameter = number_or(j, "inflated_diameter", r.inflated_diameter, path);
    r.body_length = number_or(j, "body_length", r.body_length, path);
    r.l_ctrl = number_or(j, "l_ctrl", r.l_ctrl, path);
    r.joystick_length = number_or(j, "joystick_length", r.joystick_length, path);
    r.kappa_retract = number_or(j, "kappa_retract", r.kappa_retract, path);
    r.layout.p_max = number_or(j, "p_max", r.layout.p_max, path);
    if (j.contains("layout")) {
        const auto& l = j.at("layout");
        const std::string lp = child(path, "layout");
        r.layout.c = number_or(l, "c", r.layout.c, lp);
        if (l.contains("psi")) {
            const auto& psi = l.at("psi");
            const std::string pp = child(lp, "psi");
            if (!psi.is_array() || psi.size() != 3) throw ParseError(pp, "expected three angles");
            for (std::size_t i = 0; i < 3; ++i) r.layout.psi[i] = number(psi[i], child(pp, i)) * kDeg;
        }
    }
    if (j.contains("growth")) r.growth = growth_config(j.at("growth"), child(path, "growth"));

    const auto& locs = need(j, "locations", path);
    const std::string lp = child(path, "locations");
    if (!locs.is_array() || locs.empty()) throw ParseError(lp, "expected a non-empty array");
    for (std::size_t i = 0; i < locs.size(); ++i) {
        const std::string ip = child(lp, i);
        Location loc;
        loc.name = string_or(locs[i], "name", "location " + std::to_string(i + 1), ip);
        loc.start = pose(need(locs[i], "pose", ip), child(ip, "pose"), true);
        locations.push_back(std::move(loc));
    }
    return r;
}

ScoringRubric rubric(const json& j, const std::string& path)
{
    ScoringRubric r;
    if (!j.is_object()) throw ParseError(path, "expected an object");
    r.tip_only_multiplier = number_or(j, "tip_only_multiplier", r.tip_only_multiplier, path);
    r.time_limit = number_or(j, "time_limit", r.time_limit, path);
    const std::string passage = string_or(j, "passage", "tip_only", path);
    if (passage == "tip_only") r.passage = Passage::TipOnly;
    else if (passage == "whole_body") r.passage = Passage::WholeBody;
    else throw ParseError(child(path, "passage"), "expected 'tip_only' or 'whole_body'");

    if (!j.contains("items")) return r;
    const auto& items = j.at("items");
    const std::string ip = child(path, "items");
    if (!items.is_array()) throw ParseError(ip, "expected an array");
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        const std::string p = child(ip, i);
        RubricItem item;
        item.id = string_of(need(it, "id", p), child(p, "id"));
        item.goal = string_of(need(it, "goal", p), child(p, "goal"));
        item.location = string_or(it, "location", "", p);
        item.points = number_or(it, "points", item.points, p);
        item.whole_body_required = bool_or(it, "whole_body_required", item.whole_body_required, p);
        item.aperture = string_or(it, "aperture", "", p);
        item.aperture_bonus = number_or(it, "aperture_bonus", item.aperture_bonus, p);
        if (it.contains("cylinders")) {
            const auto& c = it.at("cylinders");
            const std::string cp = child(p, "cylinders");
            if (!c.is_array()) throw ParseError(cp, "expected an array of ids");
            for (std::size_t k = 0; k < c.size(); ++k) item.cylinders.push_back(string_of(c[k], child(cp, k)));
        }
        r.items.push_back(std::move(item));
    }
    return r;
}

json rubric_json(const ScoringRubric& r)
{
    json items = json::array();
    for (const auto& it : r.items) {
        json j{{"id", it.id}, {"goal", it.goal}, {"points", it.points}, {"whole_body_required", it.whole_body_required}};
        if (!it.location.empty()) j["location"] = it.location;
        if (!it.aperture.empty()) {
            j["aperture"] = it.aperture;
            j["aperture_bonus"] = it.aperture_bonus;
        }
        if (!it.cylinders.empty()) j["cylinders"] = it.cylinders;
        items.push_back(std::move(j));
    }
    return {{"tip_only_multiplier", r.tip_only_multiplier},
            {"passage", r.passage == Passage::TipOnly ? "tip_only" : "whole_body"},
            {"time_limit", r.time_limit},
            {"items", items}};
}

struct Aabb {
    Vec3 lo;
    Vec3 hi;
};

Aabb aabb(const Box& b)
{
    const Eigen::Matrix3d r = b.pose.orientation.toRotationMatrix();
    const Vec3 half = r.cwiseAbs() * (b.extents / 2.0);
    return {b.pose.position - half, b.pose.position + half};
}

std::vector<Aabb> solid_aabbs(const Obstacle& ob)
{
    std::vector<Aabb> out;
    if (const auto* b = std::get_if<Box>(&ob.shape)) out.push_back(aabb(*b));
    else if (const auto* t = std::get_if<TunnelWalls>(&ob.shape))
        for (const auto& w : t->walls) out.push_back(aabb(w));
    else if (const auto* w = std::get_if<ApertureWall>(&ob.shape)) out.push_back(aabb(Box{w->pose, w->extents}));
    else if (const auto* c = std::get_if<UnstableCylinder>(&ob.shape))
        out.push_back({c->center - Vec3(c->radius, c->radius, 0.0), c->center + Vec3(c->radius, c->radius, c->height)});
    return out;
}

bool overlaps(const Aabb& a, const Aabb& b)
{
    constexpr double eps = 1e-9;
    for (int i = 0; i < 3; ++i)
        if (a.hi[i] - eps <= b.lo[i] || b.hi[i] - eps <= a.lo[i]) return false;
    return true;
}

bool inside_solid(const Vec3& p, const Obstacle& ob)
{
    if (const auto* b = std::get_if<Box>(&ob.shape)) return b->contains(p, -1e-9);
    if (const auto* t = std::get_if<TunnelWalls>(&ob.shape))
        return std::any_of(t->walls.begin(), t->walls.end(), [&](const Box& w) { return w.contains(p, -1e-9); });
    return false;
}

bool positive(const Vec3& v) { return (v.array() > 0.0).all() && v.allFinite(); }

void check_geometry(const Obstacle& ob, const std::string& path, std::vector<Finding>& out)
{
    auto err = [&](const std::string& m) { out.push_back({Severity::Error, path, m}); };
    if (const auto* b = std::get_if<Box>(&ob.shape)) {
        if (!positive(b->extents)) err("box extents must be positive");
    } else if (const auto* c = std::get_if<UnstableCylinder>(&ob.shape)) {
        if (!(c->radius > 0.0) || !(c->height > 0.0)) err("cylinder radius and height must be positive");
        if (!(c->topple_tolerance > 0.0)) err("topple_tolerance must be positive");
    } else if (const auto* w = std::get_if<ApertureWall>(&ob.shape)) {
        if (!positive(w->extents)) err("wall extents must be positive");
        if (!(w->hole_width > 0.0) || !(w->hole_height > 0.0)) err("hole must be positive");
        if (w->hole_width >= w->extents.x() || w->hole_height >= w->extents.y()) err("hole does not fit in the wall");
    } else if (const auto* s = std::get_if<SandRegion>(&ob.shape)) {
        if (!positive(s->box.extents)) err("sand extents must be positive");
    } else if (const auto* g = std::get_if<Goal>(&ob.shape)) {
        if (!positive(g->box.extents)) err("goal extents must be positive");
    } else if (const auto* t = std::get_if<TunnelWalls>(&ob.shape)) {
        for (const auto& w : t->walls)
            if (!positive(w.extents)) err("tunnel wall extents must be positive");
    }
}

// Findings that make a course unusable; load_course refuses these.
std::vector<Finding> invariant_findings(const Course& c)
{
    std::vector<Finding> out;
    auto err = [&](std::string path, std::string m) { out.push_back({Severity::Error, std::move(path), std::move(m)}); };

    try {
        c.robot.body_config().validate();
        c.robot.growth.validate();
    } catch (const Error& e) {
        err("/robot", e.what());
    }
    for (double v : {c.robot.inflated_diameter, c.robot.body_length, c.robot.joystick_length, c.robot.p_max()})
        if (!(v > 0.0)) {
            err("/robot", "robot configuration values must be positive");
            break;
        }

    const auto& env = c.environment;
    if (!((env.bounds.max - env.bounds.min).array() > 0.0).all()) err("/environment/bounds", "bounds are empty");
    if (!(env.gravity_dir.norm() > 0.0)) err("/environment/gravity", "gravity direction must be non-zero");

    if (c.locations.empty()) err("/robot/locations", "at least one location is required");
    std::set<std::string> loc_names;
    for (std::size_t i = 0; i < c.locations.size(); ++i) {
        const std::string p = "/robot/locations/" + std::to_string(i);
        if (!env.bounds.contains(c.locations[i].start.position)) err(p, "start pose outside bounds");
        if (!loc_names.insert(c.locations[i].name).second) err(p, "duplicate location name");
    }

    std::set<std::string> ids;
    for (std::size_t i = 0; i < env.obstacles.size(); ++i) {
        const auto& ob = env.obstacles[i];
        const std::string p = "/environment/obstacles/" + std::to_string(i);
        if (ob.id.empty()) err(p, "obstacle id is empty");
        if (!ids.insert(ob.id).second) err(p, "duplicate obstacle id '" + ob.id + "'");
        check_geometry(ob, p, out);
    }

    const auto& r = c.rubric;
    if (!(r.tip_only_multiplier > 0.0 && r.tip_only_multiplier <= 1.0))
        err("/rubric/tip_only_multiplier", "multiplier must be in (0, 1]");
    if (!(r.time_limit > 0.0)) err("/rubric/time_limit", "time limit must be positive");
    std::set<std::string> item_ids;
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        const auto& it = r.items[i];
        const std::string p = "/rubric/items/" + std::to_string(i);
        if (!item_ids.insert(it.id).second) err(p, "duplicate rubric item id");
        if (!(it.points >= 0.0) || !(it.aperture_bonus >= 0.0)) err(p, "points must be non-negative");
        const Obstacle* g = env.find(it.goal);
        if (!g || !std::holds_alternative<Goal>(g->shape)) err(p + "/goal", "'" + it.goal + "' is not a goal");
        if (!it.aperture.empty()) {
            const Obstacle* a = env.find(it.aperture);
            if (!a || !std::holds_alternative<ApertureWall>(a->shape))
                err(p + "/aperture", "'" + it.aperture + "' is not an aperture");
        }
        for (const auto& cid : it.cylinders) {
            const Obstacle* o = env.find(cid);
            if (!o || !std::holds_alternative<UnstableCylinder>(o->shape))
                err(p + "/cylinders", "'" + cid + "' is not a cylinder");
        }
        if (!it.location.empty() && !loc_names.count(it.location)) err(p + "/location", "unknown location");
    }
    return out;
}

void throw_on_errors(const std::vector<Finding>& findings)
{
    for (const auto& f : findings)
        if (f.severity == Severity::Error) throw ValidationError(f.path + ": " + f.message);
}

}  // namespace

BodyConfig RobotConfig::body_config() const
{
    BodyConfig b;
    b.layout = layout;
    b.l_ctrl = l_ctrl;
    b.inflated_diameter = inflated_diameter;
    b.body_length = body_length;
    b.kappa_retract = kappa_retract;
    return b;
}

const Pose3& Course::start_pose(std::size_t location) const
{
    if (location >= locations.size()) throw InvalidInput("course has no location " + std::to_string(location));
    return locations[location].start;
}

std::size_t Course::location_index(const std::string& name) const
{
    for (std::size_t i = 0; i < locations.size(); ++i)
        if (locations[i].name == name) return i;
    throw InvalidInput("course '" + this->name + "' has no location '" + name + "'");
}

Eigen::Quaterniond rotation_from_degrees(double yaw, double pitch, double roll)
{
    return (Eigen::AngleAxisd(yaw * kDeg, Vec3::UnitZ()) * Eigen::AngleAxisd(-pitch * kDeg, Vec3::UnitY()) *
            Eigen::AngleAxisd(roll * kDeg, Vec3::UnitX()))
        .normalized();
}

Pose3 heading_pose(const Vec3& position, double yaw_deg, double pitch_deg)
{
    return {position, (rotation_from_degrees(yaw_deg, pitch_deg, 0.0) * kFaceX).normalized()};
}

Course load_course(const json& source, const json& defaults)
{
    if (!source.is_object()) throw ParseError("", "course document must be an object");
    json doc = defaults.is_object() ? defaults : json::object();
    doc.merge_patch(source);

    const auto& fmt = need(doc, "format", "");
    if (!fmt.is_number_integer() || fmt.get<int>() != kCourseFormat)
        throw ParseError("/format", "unsupported format (expected " + std::to_string(kCourseFormat) + ")");

    Course c;
    c.name = string_of(need(doc, "name", ""), "/name");
    c.robot = robot_config(need(doc, "robot", ""), "/robot", c.locations);

    const auto& env = need(doc, "environment", "");
    if (env.contains("bounds")) {
        const auto& b = env.at("bounds");
        c.environment.bounds.min = vec3(need(b, "min", "/environment/bounds"), "/environment/bounds/min");
        c.environment.bounds.max = vec3(need(b, "max", "/environment/bounds"), "/environment/bounds/max");
    }
    if (env.contains("gravity")) c.environment.gravity_dir = vec3(env.at("gravity"), "/environment/gravity");
    if (env.contains("obstacles")) {
        const auto& obs = env.at("obstacles");
        if (!obs.is_array()) throw ParseError("/environment/obstacles", "expected an array");
        for (std::size_t i = 0; i < obs.size(); ++i)
            c.environment.obstacles.push_back(obstacle(obs[i], child("/environment/obstacles", i)));
    }
    c.rubric = rubric(doc.value("rubric", json::object()), "/rubric");
    if (doc.contains("meta")) {
        if (!doc.at("meta").is_object()) throw ParseError("/meta", "expected an object");
        c.meta = doc.at("meta");
    }

    throw_on_errors(invariant_findings(c));
    c.document = std::move(doc);
    return c;
}

Course load_course_text(const std::string& text, const json& defaults)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
    return load_course(doc, defaults);
}

Course load_course_file(const std::string& path, const json& defaults)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open course file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_course_text(ss.str(), defaults);
}

json serialize_course(const Course& c)
{
    const auto& r = c.robot;
    json locs = json::array();
    for (const auto& l : c.locations) locs.push_back({{"name", l.name}, {"pose", pose_json(l.start, true)}});
    json robot{{"inflated_diameter", r.inflated_diameter},
               {"body_length", r.body_length},
               {"l_ctrl", r.l_ctrl},
               {"joystick_length", r.joystick_length},
               {"kappa_retract", r.kappa_retract},
               {"p_max", r.layout.p_max},
               {"layout",
                {{"c", r.layout.c},
                 {"psi", json::array({r.layout.psi[0] / kDeg, r.layout.psi[1] / kDeg, r.layout.psi[2] / kDeg})}}},
               {"growth", growth_json(r.growth)},
               {"locations", locs}};

    json obs = json::array();
    for (const auto& ob : c.environment.obstacles) obs.push_back(obstacle_json(ob));
    json env{{"bounds", {{"min", vec_json(c.environment.bounds.min)}, {"max", vec_json(c.environment.bounds.max)}}},
             {"gravity", vec_json(c.environment.gravity_dir)},
             {"obstacles", obs}};

    return {{"format", kCourseFormat}, {"name", c.name},      {"robot", robot},
            {"environment", env},      {"rubric", rubric_json(c.rubric)}, {"meta", c.meta}};
}

std::uint64_t course_hash(const Course& c)
{
    const json& doc = c.document.is_null() ? serialize_course(c) : c.document;
    return Fnv1a().add(std::string_view(doc.dump())).value();
}

json env_defaults()
{
    const char* path = std::getenv("VINESIM_CONFIG");
    if (!path || !*path) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError(std::string("VINESIM_CONFIG: cannot open '") + path + "'");
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw ConfigError("VINESIM_CONFIG: expected a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("VINESIM_CONFIG: ") + e.what());
    }
}

std::vector<Finding> validate_course(const Course& c)
{
    std::vector<Finding> out = invariant_findings(c);
    const auto& env = c.environment;
    const auto& obs = env.obstacles;

    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& ob = obs[i];
        const std::string p = "/environment/obstacles/" + std::to_string(i);
        if (const auto* g = std::get_if<Goal>(&ob.shape)) {
            const Vec3 centre = g->box.pose.position;
            if (!env.bounds.contains(centre)) {
                out.push_back({Severity::Error, p, "goal '" + ob.id + "' outside bounds"});
                continue;
            }
            for (const auto& other : obs)
                if (inside_solid(centre, other))
                    out.push_back({Severity::Error, p, "goal '" + ob.id + "' is inside '" + other.id + "'"});
            double nearest = 1e300;
            for (const auto& l : c.locations) nearest = std::min(nearest, (centre - l.start.position).norm());
            const double margin = g->box.extents.norm() / 2.0;
            if (nearest - margin > c.robot.body_length)
                out.push_back({Severity::Error, p, "goal '" + ob.id + "' unreachable with the available body length"});
        }
        if (const auto* w = std::get_if<ApertureWall>(&ob.shape)) {
            const double hole_cm = 100.0 * std::min(w->hole_width, w->hole_height);
            if (hole_cm > 0.0 && aperture_check(c.robot.inflated_diameter, hole_cm) == ApertureResult::Buckle)
                out.push_back({Severity::Warning, p, "aperture below shrink threshold"});
        }
    }

    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto a = solid_aabbs(obs[i]);
        for (std::size_t j = i + 1; j < obs.size(); ++j) {
            const auto b = solid_aabbs(obs[j]);
            bool hit = false;
            for (const auto& x : a)
                for (const auto& y : b) hit = hit || overlaps(x, y);
            if (hit)
                out.push_back({Severity::Warning, "/environment/obstacles/" + std::to_string(j),
                               "'" + obs[i].id + "' and '" + obs[j].id + "' overlap"});
        }
    }
    return out;
}

ScoreBreakdown score_run(const RunRecord& record, const Course& course)
{
    if (record.course_hash != course_hash(course))
        throw ValidationError("run was recorded on a different course (hash " + to_hex(record.course_hash) +
                              ", course " + to_hex(course_hash(course)) + ")");
    if (!(record.tick_hz > 0.0)) throw ValidationError("run record has no tick rate");

    ScoreBreakdown out;
    if (!record.entries.empty()) out.duration = static_cast<double>(record.entries.back().tick) / record.tick_hz;

    auto reached_at = [&](const std::string& goal) -> std::optional<double> {
        for (const auto& e : record.entries)
            for (const auto& ev : e.events)
                if (ev.kind == EventKind::GoalReached && ev.id == goal) return static_cast<double>(ev.tick) / record.tick_hz;
        return std::nullopt;
    };
    auto toppled = [&](const std::vector<std::string>& ids) {
        for (const auto& e : record.entries)
            for (const auto& ev : e.events)
                if (ev.kind == EventKind::CylinderToppled &&
                    (ids.empty() || std::find(ids.begin(), ids.end(), ev.id) != ids.end()))
                    return true;
        return false;
    };

    const auto& rub = course.rubric;
    for (const auto& it : rub.items) {
        if (!it.location.empty() && it.location != record.location) continue;
        ItemScore s;
        s.id = it.id;
        if (!it.aperture.empty()) {
            const auto* wall = std::get_if<ApertureWall>(&course.environment.find(it.aperture)->shape);
            const double ratio = 100.0 * std::min(wall->hole_width, wall->hole_height) / course.robot.inflated_diameter;
            s.bonus = it.aperture_bonus * std::clamp(1.0 - ratio, 0.0, 1.0);
        }
        s.possible = it.points + s.bonus;
        const auto t = reached_at(it.goal);
        s.reached = t && *t <= rub.time_limit;
        if (rub.passage == Passage::TipOnly && it.whole_body_required) s.multiplier = rub.tip_only_multiplier;
        if (!s.reached) {
            s.note = t ? "reached after the time limit" : "not reached";
        } else if (!it.cylinders.empty() && toppled(it.cylinders)) {
            s.note = "cylinder toppled";
        } else {
            s.awarded = s.possible * s.multiplier;
            if (s.multiplier < 1.0) s.note = "tip-only passage";
        }
        out.total += s.awarded;
        out.possible += s.possible;
        out.items.push_back(std::move(s));
    }
    return out;
}

json to_json(const ScoreBreakdown& s)
{
    json items = json::array();
    for (const auto& i : s.items)
        items.push_back({{"id", i.id},
                         {"possible", i.possible},
                         {"awarded", i.awarded},
                         {"reached", i.reached},
                         {"multiplier", i.multiplier},
                         {"bonus", i.bonus},
                         {"note", i.note}});
    return {{"items", items}, {"total", s.total}, {"possible", s.possible}, {"duration", s.duration}};
}

json to_json(const Finding& f)
{
    return {{"severity", f.severity == Severity::Error ? "error" : "warning"}, {"path", f.path}, {"message", f.message}};
}

}  // namespace vinesim
