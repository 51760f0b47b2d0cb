#pragma once

// Kinematic eversion model.
//
// The body is a frozen laid path (poses that never move once appended) plus
// one steerable constant-curvature arc at the distal end whose length is
// capped at l_ctrl. Growth lengthens the arc; whatever exceeds l_ctrl is
// frozen onto the laid path. Contact is tip-only: the tip slides along solid
// surfaces, pushes unstable cylinders, and is stopped by apertures that are
// too small for the body.

#include "vinesim/kinematics.hpp"
#include "vinesim/steering.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vinesim {

/// Oriented box centred on `pose`; `extents` are full side lengths, m.
struct Box {
    Pose3 pose;
    Vec3 extents = Vec3::Ones();

    bool contains(const Vec3& p, double margin = 0.0) const;
};

struct AlignedBox {
    Vec3 min = Vec3::Constant(-1e9);
    Vec3 max = Vec3::Constant(1e9);

    bool contains(const Vec3& p) const;
};

/// Free-standing cylinder whose axis is opposite to gravity.
struct UnstableCylinder {
    Vec3 center = Vec3::Zero();  ///< centre of the bottom face
    double radius = 0.05;
    double height = 0.3;
    double topple_tolerance = 0.03;  ///< m of push before it falls over
};

/// Thin wall (local z is the thickness direction) with a rectangular hole
/// centred on the wall pose.
struct ApertureWall {
    Pose3 pose;
    Vec3 extents = Vec3(1.0, 1.0, 0.02);
    double hole_width = 0.05;
    double hole_height = 0.05;
};

struct SandRegion {
    Box box;
};

struct TunnelWalls {
    std::vector<Box> walls;
};

struct Goal {
    Box box;
};

using ObstacleShape = std::variant<Box, UnstableCylinder, ApertureWall, SandRegion, TunnelWalls, Goal>;

struct Obstacle {
    std::string id;
    ObstacleShape shape;
    bool estimated = false;  ///< dimensions estimated rather than measured
};

struct Environment {
    std::vector<Obstacle> obstacles;
    AlignedBox bounds;
    Vec3 gravity_dir = -Vec3::UnitZ();

    const Obstacle* find(const std::string& id) const;
};

enum class EventKind { ApertureBuckle, CylinderToppled, RetractionBuckle, GoalReached, ContactSlide, Saturated };

const char* to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(const std::string& s);

struct Event {
    EventKind kind = EventKind::ContactSlide;
    std::string id;  ///< obstacle id where applicable
    std::uint64_t tick = 0;
    Vec3 position = Vec3::Zero();

    bool operator==(const Event&) const = default;
};

struct BodyConfig {
    ActuatorLayout layout = ActuatorLayout::equally_spaced();
    double l_ctrl = 1.0;              ///< m, steerable distal length
    double inflated_diameter = 7.0;   ///< cm
    double body_length = 10.0;        ///< m of material on the spool
    double kappa_retract = 0.2;       ///< 1/m
    double retract_window = 2.0;      ///< m, distal span checked for curvature
    double curvature_baseline = 0.1;  ///< m, arc-length baseline for curvature estimates
    double freeze_spacing = 0.05;     ///< m, max spacing of frozen poses

    void validate() const;
};

struct LaidPose {
    Pose3 pose;
    double s = 0.0;  ///< polyline length from the base to this pose

    bool operator==(const LaidPose& o) const;
};

struct BodyState {
    std::vector<LaidPose> laid;  ///< laid[0] is the base; never empty
    ArcParams active;            ///< in the frame of laid.back()
    double total_length = 0.0;   ///< m
    double inflated_diameter = 7.0;
    double l_ctrl = 1.0;
    std::uint64_t laid_digest = 0;  ///< running hash of `laid`, kept by append_laid()

    static BodyState at(const Pose3& base, const BodyConfig& cfg);

    double laid_length() const { return laid.back().s; }
    const Pose3& active_base() const { return laid.back().pose; }

    void append_laid(const Pose3& pose);
    void rehash_laid();
};

struct CylinderState {
    Vec3 offset = Vec3::Zero();  ///< accumulated slide
    double pushed = 0.0;         ///< m, total push magnitude
    bool toppled = false;
    bool touched = false;
};

/// Mutable parts of the world plus edge-trigger bookkeeping for events.
struct WorldState {
    std::vector<CylinderState> cylinders;  ///< indexed like Environment::obstacles
    std::vector<std::string> goals_reached;
    std::vector<std::string> apertures_blocked;
    bool in_contact = false;
    bool retract_blocked = false;
    bool reach_clamped = false;  ///< last step clipped the steering target to the reachable set

    static WorldState for_environment(const Environment& env);
};

struct SimState {
    BodyState body;
    WorldState world;
    std::uint64_t tick = 0;
};

/// Advances the body by one tick. `growth` is in cm/s; negative values
/// retract. Throws InvalidInput for dt <= 0 or a tick longer than 0.1 l_ctrl.
std::vector<Event> step(SimState& state, const Environment& env, const BodyConfig& cfg,
                        const PressureCommand& steering, double growth, double dt);

enum class ApertureResult { Pass, Buckle };

/// Shrink-ratio rule: the body squeezes through a square hole whose side is
/// at least kShrinkRatio times its inflated diameter.
inline constexpr double kShrinkRatio = 0.57;
ApertureResult aperture_check(double inflated_diameter, double hole_side);

/// Removes the component of `motion` that points into the surface.
Vec3 collide_slide(const Vec3& motion, const Vec3& contact_normal);

enum class CylinderContact { None, Slide, Topple };

struct CylinderInteraction {
    CylinderContact contact = CylinderContact::None;
    double penetration = 0.0;      ///< m
    Vec3 push_dir = Vec3::Zero();  ///< horizontal, away from the tip
};

CylinderInteraction cylinder_interaction(const Vec3& from, const Vec3& to, const UnstableCylinder& cyl,
                                         const Vec3& up = Vec3::UnitZ());

/// Shortens the body from the tip by dL metres unless the distal laid path is
/// too curved, in which case the body buckles instead.
std::vector<Event> retract(BodyState& state, const BodyConfig& cfg, double dL, bool* buckled = nullptr);

/// Maximum curvature of the laid path over the distal `window` metres.
double distal_laid_curvature(const BodyState& state, double window, double baseline);

Pose3 camera_pose(const BodyState& state);

/// Laid positions followed by `arc_points` samples along the active arc.
std::vector<Vec3> backbone_polyline(const BodyState& state, int arc_points = 16);

/// Sum of chord lengths along the laid path.
double polyline_length(const std::vector<LaidPose>& laid);

std::uint64_t state_digest(const SimState& state);

}  // namespace vinesim
