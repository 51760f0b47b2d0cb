#include "vinesim/pilot.hpp"

#include "vinesim/error.hpp"

#include <cmath>

namespace vinesim {

using nlohmann::json;

namespace {

Waypoint wp(double x, double y, double z, bool straight = false) { return {Vec3(x, y, z), straight}; }

double number(const json& j, const char* key, double fallback, const std::string& path)
{
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ParseError(path + "/" + key, "expected a number");
    return it->get<double>();
}

}  // namespace

FlightPlan plan_from_json(const json& j)
{
    if (!j.is_object()) throw ParseError("", "expected a flight plan object");
    FlightPlan p;
    p.location = j.value("location", std::string());
    p.r_p = number(j, "r_p", p.r_p, "");
    p.r_m = number(j, "r_m", p.r_m, "");
    p.retract_for = number(j, "retract_for", p.retract_for, "");
    p.retract_r_m = number(j, "retract_r_m", p.retract_r_m, "");
    p.max_time = number(j, "max_time", p.max_time, "");
    auto route = j.find("route");
    if (route == j.end() || !route->is_array() || route->empty()) throw ParseError("/route", "expected waypoints");
    for (std::size_t i = 0; i < route->size(); ++i) {
        const std::string path = "/route/" + std::to_string(i);
        const auto& w = (*route)[i];
        auto pt = w.find("point");
        if (pt == w.end() || !pt->is_array() || pt->size() != 3) throw ParseError(path + "/point", "expected [x, y, z]");
        Waypoint out;
        for (int k = 0; k < 3; ++k) {
            if (!(*pt)[k].is_number()) throw ParseError(path + "/point/" + std::to_string(k), "expected a number");
            out.point[k] = (*pt)[k].get<double>();
        }
        out.straight = w.value("straight", false);
        p.route.push_back(out);
    }
    if (!(p.max_time > 0.0)) throw ParseError("/max_time", "must be positive");
    if (p.retract_for < 0.0) throw ParseError("/retract_for", "must not be negative");
    return p;
}

json to_json(const FlightPlan& p)
{
    json route = json::array();
    for (const auto& w : p.route) {
        json j{{"point", {w.point.x(), w.point.y(), w.point.z()}}};
        if (w.straight) j["straight"] = true;
        route.push_back(j);
    }
    return {{"location", p.location},       {"route", route},
            {"r_p", p.r_p},                 {"r_m", p.r_m},
            {"retract_for", p.retract_for}, {"retract_r_m", p.retract_r_m},
            {"max_time", p.max_time}};
}

FlightPlan builtin_plan(const std::string& course, const std::string& location)
{
    FlightPlan p;
    p.location = location;
    if (course == "robosoft2018" && (location.empty() || location == "course_start")) {
        p.location = "course_start";
        p.r_m = 614.0;
        p.max_time = 300.0;
        // straight through the hole, climb over the steps, drop back down
        // and thread the gap between the cylinder rows
        p.route = {wp(3.2, 0, 0.1, true), wp(5.2, 0, 0.45), wp(6.3, 0, 0.45), wp(7.2, 0, 0.25), wp(9.2, 0, 0.25)};
        return p;
    }
    if (course == "chavin") {
        p.max_time = 600.0;
        if (location == "rock_blockage") {
            p.route = {wp(2.3, 0, 0.68), wp(3.6, 0, 0.68), wp(4.4, 0, 0.4), wp(6.4, 0, 0.4)};
            return p;
        }
        if (location == "right_turn") {
            // hold the centre line past the inner corner, then one sweeping turn
            p.route = {wp(3.3, 5, 0.4, true), wp(3.5, 2.8, 0.4)};
            p.retract_for = 20.0;
            return p;
        }
        if (location == "vertical_shaft") {
            p.route = {wp(0.7, 10, 0.4, true), wp(1.6, 10, 1.2), wp(1.6, 10, 3.2)};
            return p;
        }
    }
    throw InvalidInput("no built-in plan for " + course + (location.empty() ? "" : "/" + location));
}

std::vector<std::string> builtin_plan_locations(const std::string& course)
{
    if (course == "robosoft2018") return {"course_start"};
    if (course == "chavin") return {"rock_blockage", "right_turn", "vertical_shaft"};
    return {};
}

Pilot::Pilot(FlightPlan plan) : plan_(std::move(plan))
{
    if (plan_.route.empty()) throw InvalidInput("flight plan has no waypoints");
}

bool Pilot::passed(const Vec3& tip) const
{
    const Vec3 along = plan_.route[index_].point - previous_;
    return (tip - plan_.route[index_].point).dot(along) >= 0.0;
}

TeleopInput Pilot::command(const Session& s)
{
    const BodyState& body = s.sim().body;
    const Vec3 tip = camera_pose(body).position;
    const double now = static_cast<double>(s.tick_count()) * s.dt();
    if (!started_) {
        previous_ = tip;
        started_ = true;
    }
    while (phase_ == Phase::Route && passed(tip)) {
        previous_ = plan_.route[index_].point;
        if (++index_ == plan_.route.size()) {
            phase_ = plan_.retract_for > 0.0 ? Phase::Retract : Phase::Done;
            retract_until_ = now + plan_.retract_for;
        }
    }
    if (phase_ == Phase::Retract && now >= retract_until_) phase_ = Phase::Done;
    if (now >= plan_.max_time) phase_ = Phase::Done;

    TeleopInput in;
    if (phase_ == Phase::Done) return in;
    if (phase_ == Phase::Retract) {
        in.d = Direction::Retraction;
        in.r_m = plan_.retract_r_m;
        return in;
    }

    in.r_p = plan_.r_p;
    in.r_m = plan_.r_m;
    const Waypoint& target = plan_.route[index_];
    const double s_active = body.active.s;
    const double L = s.course().robot.joystick_length;
    ArcParams path;
    if (target.straight || s_active <= 0.0 || !arc_through_point(body.active_base(), target.point, path))
        return in;
    // Bend the active segment onto the circle through the waypoint.
    TipPosition offset = arc_to_tip({path.kappa, path.phi, s_active});
    const double reach = max_lateral_reach(L) * (1.0 - 1e-6);
    if (offset.norm() > reach) offset = {offset.x * reach / offset.norm(), offset.y * reach / offset.norm()};
    const ArcParams stick = tip_to_arc(offset, L);
    in.q = bend_to_quat(stick.kappa, stick.phi, L);
    return in;
}

Flight fly(const Course& course, const FlightPlan& plan, double tick_hz)
{
    const std::size_t loc = plan.location.empty() ? 0 : course.location_index(plan.location);
    Session s(course, SessionOptions{tick_hz, loc, true});
    Flight f;
    f.record = s.record_header();
    s.on_entry = [&](const RunEntry& e) { f.record.entries.push_back(e); };
    Pilot pilot(plan);
    bool route_done = false;
    while (true) {
        const TeleopInput in = pilot.command(s);
        if (!route_done && pilot.next_waypoint() == plan.route.size()) {
            route_done = true;
            f.completed = true;
            f.route_time = static_cast<double>(s.tick_count()) * s.dt();
            f.route_length = s.sim().body.total_length;
        }
        if (pilot.finished()) break;
        s.apply_input(in);
        auto ev = s.tick();
        f.events.insert(f.events.end(), ev.begin(), ev.end());
    }
    f.sim_time = static_cast<double>(s.tick_count()) * s.dt();
    f.final = s.snapshot();
    return f;
}

}  // namespace vinesim
