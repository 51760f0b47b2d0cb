#include "vinesim/kinematics.hpp"

#include "vinesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vinesim {

namespace {

constexpr double kPi = std::numbers::pi;

// (1 - cos t) / t written without cancellation.
double lateral_factor(double t)
{
    const double h = std::sin(0.5 * t);
    return 2.0 * h * h / t;
}

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " is not finite");
}

}  // namespace

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const
{
    require_finite(w, "quaternion w");
    require_finite(x, "quaternion x");
    require_finite(y, "quaternion y");
    require_finite(z, "quaternion z");
    const double n = norm();
    if (n == 0.0) throw InvalidInput("quaternion has zero norm");
    return {w / n, x / n, y / n, z / n};
}

double TipPosition::norm() const { return std::hypot(x, y); }

double wrap_angle(double a)
{
    const double two_pi = 2.0 * kPi;
    double r = a - two_pi * std::floor((a + kPi) / two_pi);
    if (r >= kPi) r -= two_pi;
    if (r < -kPi) r += two_pi;
    return r;
}

double max_lateral_reach(double s) { return s * lateral_factor(kMaxInvertibleBend); }

ArcParams quat_to_arc(const Quaternion& q_in, double s)
{
    require_finite(s, "joystick length");
    if (s <= 0.0) throw InvalidInput("joystick length must be positive");
    const Quaternion q = q_in.normalized();

    const double lateral_sq = q.x * q.x + q.y * q.y;
    if (lateral_sq == 0.0) return {0.0, 0.0, s};

    const double c = std::clamp(1.0 - 2.0 * lateral_sq, -1.0, 1.0);
    const double kappa = std::acos(c) / s;
    const double phi = std::atan2(q.x * q.w + q.y * q.z, q.x * q.z - q.y * q.w);
    return {kappa, wrap_angle(phi), s};
}

Quaternion bend_to_quat(double kappa, double phi, double s)
{
    require_finite(kappa, "kappa");
    require_finite(phi, "phi");
    require_finite(s, "joystick length");
    if (kappa < 0.0) throw InvalidInput("kappa must be non-negative");
    if (s <= 0.0) throw InvalidInput("joystick length must be positive");
    const double half = 0.5 * std::min(kappa * s, kPi);
    const double sh = std::sin(half);
    return {std::cos(half), sh * std::sin(phi), -sh * std::cos(phi), 0.0};
}

TipPosition arc_to_tip(const ArcParams& arc)
{
    require_finite(arc.kappa, "kappa");
    require_finite(arc.phi, "phi");
    require_finite(arc.s, "arc length");
    if (arc.kappa == 0.0) return {0.0, 0.0};
    const double lateral = arc.s * lateral_factor(arc.kappa * arc.s);
    return {std::cos(arc.phi) * lateral, -std::sin(arc.phi) * lateral};
}

ArcParams tip_to_arc(const TipPosition& tip, double s)
{
    require_finite(tip.x, "tip x");
    require_finite(tip.y, "tip y");
    require_finite(s, "arc length");
    if (s <= 0.0) throw InvalidInput("arc length must be positive");

    const double r = tip.norm();
    if (r == 0.0) return {0.0, 0.0, s};
    if (r > max_lateral_reach(s)) throw OutOfWorkspace("tip lies outside the reachable lateral set");

    const double phi = wrap_angle(std::atan2(-tip.y, tip.x));
    const double target = r / s;

    // lateral_factor is increasing on (0, kMaxInvertibleBend].
    double lo = 0.0;
    double hi = kMaxInvertibleBend;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (lateral_factor(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double bend = 0.5 * (lo + hi);
    return {bend / s, phi, s};
}

Pose3 arc_pose_at(const Pose3& base, const ArcParams& arc, double t)
{
    Vec3 local;
    Eigen::Quaterniond rot = Eigen::Quaterniond::Identity();
    if (arc.kappa == 0.0) {
        local = Vec3(0.0, 0.0, t);
    } else {
        const Vec3 bend_dir(std::cos(arc.phi), -std::sin(arc.phi), 0.0);
        const Vec3 axis = Vec3::UnitZ().cross(bend_dir);
        const double angle = arc.kappa * t;
        local = bend_dir * (t * lateral_factor(angle)) + Vec3::UnitZ() * (std::sin(angle) / arc.kappa);
        rot = Eigen::AngleAxisd(angle, axis);
    }
    Pose3 out;
    out.position = base.position + base.orientation * local;
    out.orientation = (base.orientation * rot).normalized();
    return out;
}

std::vector<Pose3> arc_backbone_points(const Pose3& base, const ArcParams& arc, int n)
{
    if (n < 2) throw InvalidInput("backbone needs at least two points");
    std::vector<Pose3> out;
    out.reserve(static_cast<std::size_t>(n));
    out.push_back(base);
    for (int i = 1; i < n; ++i) out.push_back(arc_pose_at(base, arc, arc.s * i / (n - 1)));
    return out;
}

bool arc_through_point(const Pose3& base, const Vec3& target, ArcParams& out)
{
    const Vec3 local = base.orientation.conjugate() * (target - base.position);
    const double r = std::hypot(local.x(), local.y());
    const double h = local.z();
    if (h <= 0.0) return false;
    if (r == 0.0) {
        out = {0.0, 0.0, h};
        return true;
    }
    const double bend = 2.0 * std::atan2(r, h);
    const double kappa = 2.0 * r / (r * r + h * h);
    out = {kappa, wrap_angle(std::atan2(-local.y(), local.x())), bend / kappa};
    return true;
}

}  // namespace vinesim
