#pragma once

// Constant-curvature geometry shared by the joystick interpretation and the
// simulated body.
//
// Frame convention: a segment starts at a base pose whose local +z is the
// growth direction. An arc with bending-plane angle phi curves toward the
// local direction (cos phi, -sin phi, 0); this is the direction that makes the
// 3D endpoint agree with the lateral tip formula in arc_to_tip().

#include <Eigen/Geometry>

#include <vector>

namespace vinesim {

using Vec3 = Eigen::Vector3d;

struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
    /// Throws InvalidInput for non-finite components or zero norm.
    Quaternion normalized() const;
};

struct ArcParams {
    double kappa = 0.0;  ///< curvature, 1/m
    double phi = 0.0;    ///< bending-plane angle, rad, [-pi, pi)
    double s = 0.0;      ///< arc length, m
};

/// Lateral tip displacement, in the two directions orthogonal to growth.
struct TipPosition {
    double x = 0.0;
    double y = 0.0;

    double norm() const;
};

struct Pose3 {
    Vec3 position = Vec3::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();

    Vec3 tangent() const { return orientation * Vec3::UnitZ(); }
    static Pose3 identity() { return {}; }
};

/// Bend angle kappa*s at which the lateral reach (1 - cos t)/t * s peaks
/// (root of tan(t/2) = t). Beyond it the lateral map folds back, so
/// tip_to_arc() only returns arcs with kappa*s <= kMaxInvertibleBend.
inline constexpr double kMaxInvertibleBend = 2.3311223704144224;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Largest lateral displacement reachable by an arc of length s.
double max_lateral_reach(double s);

ArcParams quat_to_arc(const Quaternion& q, double s);

/// Inverse of quat_to_arc for a joystick of length s; picks q_z = 0.
Quaternion bend_to_quat(double kappa, double phi, double s);

TipPosition arc_to_tip(const ArcParams& arc);

/// Principal-branch inverse of arc_to_tip. Throws OutOfWorkspace when
/// |tip| > max_lateral_reach(s).
ArcParams tip_to_arc(const TipPosition& tip, double s);

/// Pose at arc length t along `arc` from `base`.
Pose3 arc_pose_at(const Pose3& base, const ArcParams& arc, double t);

/// n poses evenly spaced in arc length from base to the arc tip (n >= 2).
std::vector<Pose3> arc_backbone_points(const Pose3& base, const ArcParams& arc, int n);

/// The constant-curvature arc that leaves `base` along its +z and ends at
/// `target`. Returns false when the target lies behind the base plane.
bool arc_through_point(const Pose3& base, const Vec3& target, ArcParams& out);

}  // namespace vinesim
