#pragma once

// Scripted operator: steers a session along a list of waypoints the way a
// human closes the loop by eye, and records the inputs it sends.

#include "vinesim/teleop.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace vinesim {

struct Waypoint {
    Vec3 point = Vec3::Zero();
    bool straight = false;  ///< hold the stick centred until the tip passes
};

struct FlightPlan {
    std::string location;  ///< empty: the course's first location
    std::vector<Waypoint> route;
    double r_p = 1023.0;      ///< pressure pot while growing
    double r_m = 600.0;       ///< speed pot while growing
    double retract_for = 0.0;  ///< s of retraction once the route is done
    double retract_r_m = 600.0;
    double max_time = 600.0;  ///< s, gives up after this
};

FlightPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FlightPlan& p);

/// Plan that drives `location` of a built-in course. Throws InvalidInput if
/// there is none.
FlightPlan builtin_plan(const std::string& course, const std::string& location);
/// Locations of `course` with a built-in plan.
std::vector<std::string> builtin_plan_locations(const std::string& course);

class Pilot {
public:
    explicit Pilot(FlightPlan plan);

    /// Input for the coming tick, given the state after the last one.
    TeleopInput command(const Session& s);

    bool finished() const { return phase_ == Phase::Done; }
    std::size_t next_waypoint() const { return index_; }

private:
    enum class Phase { Route, Retract, Done };

    bool passed(const Vec3& tip) const;

    FlightPlan plan_;
    Phase phase_ = Phase::Route;
    std::size_t index_ = 0;
    Vec3 previous_ = Vec3::Zero();
    bool started_ = false;
    double retract_until_ = 0.0;
};

struct Flight {
    RunRecord record;
    Snapshot final;
    std::vector<Event> events;
    double sim_time = 0.0;         ///< s until the pilot finished or gave up
    double route_time = 0.0;       ///< s until the last waypoint was passed
    double route_length = 0.0;     ///< m deployed when the last waypoint was passed
    bool completed = false;        ///< every waypoint passed
};

/// Runs a fresh session on `course` under `plan` and records every tick.
Flight fly(const Course& course, const FlightPlan& plan, double tick_hz = 50.0);

}  // namespace vinesim
