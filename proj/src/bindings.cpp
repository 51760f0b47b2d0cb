// Python module: kinematics, steering and growth helpers, courses, sessions,
// scripted runs, replay and scoring. JSON-shaped data crosses as dicts.

#include "vinesim/error.hpp"
#include "vinesim/hash.hpp"
#include "vinesim/pilot.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace vinesim;
using nlohmann::json;

namespace {

py::object to_py(const json& j)
{
    switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
        py::list l;
        for (const auto& v : j) l.append(to_py(v));
        return l;
    }
    case json::value_t::object: {
        py::dict d;
        for (auto it = j.begin(); it != j.end(); ++it) d[py::str(it.key())] = to_py(it.value());
        return d;
    }
    default: return py::none();
    }
}

json from_py(const py::handle& o)
{
    if (py::isinstance<py::str>(o)) return json::parse(o.cast<std::string>());
    const auto dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(o).cast<std::string>());
}

// A built-in name, a JSON string or a dict.
Course course_from(const py::handle& o)
{
    if (py::isinstance<py::str>(o)) {
        const auto s = o.cast<std::string>();
        for (const auto& n : builtin_course_names())
            if (n == s) return builtin_course(n);
    }
    return load_course(from_py(o));
}

std::string log_text(const RunRecord& r)
{
    std::ostringstream o;
    write_log(o, r);
    return o.str();
}

RunRecord record_from(const std::string& text)
{
    std::istringstream in(text);
    return read_log(in);
}

class PySession {
public:
    PySession(const py::handle& course, double tick_hz, const std::string& location)
        : session_(course_from(course), SessionOptions{tick_hz, 0, true})
    {
        if (!location.empty())
            session_ = Session(session_.course(), SessionOptions{tick_hz, session_.course().location_index(location), true});
        record_ = session_.record_header();
        session_.on_entry = [this](const RunEntry& e) { record_.entries.push_back(e); };
    }

    void apply_input(std::optional<std::array<double, 4>> q, std::optional<std::array<double, 2>> bend, double r_p,
                     double r_m, int d, bool estop)
    {
        TeleopInput in;
        if (q && bend) throw InvalidInput("give either q or bend, not both");
        if (q) in.q = {(*q)[0], (*q)[1], (*q)[2], (*q)[3]};
        if (bend) in.q = bend_to_quat((*bend)[0], (*bend)[1], session_.course().robot.joystick_length);
        in.r_p = r_p;
        in.r_m = r_m;
        if (d != -1 && d != 1) throw InvalidInput("d must be -1 (growth) or 1 (retraction)");
        in.d = static_cast<Direction>(d);
        in.estop = estop;
        session_.apply_input(in);
    }

    py::list tick(int n)
    {
        py::list out;
        for (int i = 0; i < n; ++i)
            for (const auto& e : session_.tick()) out.append(to_py(to_json(e)));
        return out;
    }

    Session session_;
    RunRecord record_;
};

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Vine robot teleoperation simulator core";

    py::register_exception<Error>(m, "Error");
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<OutOfWorkspace>(m, "OutOfWorkspace", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ReplayIntegrityError>(m, "ReplayIntegrityError", PyExc_RuntimeError);

    m.attr("MAX_INVERTIBLE_BEND") = kMaxInvertibleBend;

    m.def(
        "quat_to_arc",
        [](std::array<double, 4> q, double s) {
            const auto a = quat_to_arc({q[0], q[1], q[2], q[3]}, s);
            return std::make_tuple(a.kappa, a.phi, a.s);
        },
        py::arg("q"), py::arg("s"), "(w, x, y, z), s -> (kappa, phi, s)");
    m.def(
        "bend_to_quat",
        [](double kappa, double phi, double s) {
            const auto q = bend_to_quat(kappa, phi, s);
            return std::make_tuple(q.w, q.x, q.y, q.z);
        },
        py::arg("kappa"), py::arg("phi"), py::arg("s"));
    m.def(
        "arc_to_tip",
        [](double kappa, double phi, double s) {
            const auto t = arc_to_tip({kappa, phi, s});
            return std::make_tuple(t.x, t.y);
        },
        py::arg("kappa"), py::arg("phi"), py::arg("s"));
    m.def(
        "tip_to_arc",
        [](double x, double y, double s) {
            const auto a = tip_to_arc({x, y}, s);
            return std::make_tuple(a.kappa, a.phi, a.s);
        },
        py::arg("x"), py::arg("y"), py::arg("s"));
    m.def("max_lateral_reach", &max_lateral_reach, py::arg("s"));

    m.def(
        "solve_pressures",
        [](double x, double y, double c, double p_max) {
            const auto sol = solve_pressures({x, y}, ActuatorLayout::equally_spaced(c, p_max));
            return py::make_tuple(sol.pressures.p1, sol.pressures.p2, sol.pressures.p3, sol.saturated);
        },
        py::arg("x"), py::arg("y"), py::arg("c") = 0.01, py::arg("p_max") = 14.0,
        "Pressures (p1, p2, p3, saturated) for a tip offset on the 90/210/330 degree layout");
    m.def(
        "superpose_tip",
        [](double p1, double p2, double p3, double c) {
            const auto t = superpose_tip({p1, p2, p3}, ActuatorLayout::equally_spaced(c, 14.0));
            return std::make_tuple(t.x, t.y);
        },
        py::arg("p1"), py::arg("p2"), py::arg("p3"), py::arg("c") = 0.01);

    m.def(
        "flow_limited_speed",
        [](double q_max, double body_radius) {
            GrowthConfig g;
            g.q_max = q_max;
            g.body_radius = body_radius;
            return flow_limited_speed(g);
        },
        py::arg("q_max") = 470.0, py::arg("body_radius") = 2.5, "cm/s");
    m.def(
        "aperture_passes",
        [](double diameter_cm, double hole_cm) { return aperture_check(diameter_cm, hole_cm) == ApertureResult::Pass; },
        py::arg("diameter_cm"), py::arg("hole_cm"));

    m.def("builtin_course_names", &builtin_course_names);
    m.def(
        "builtin_course_document", [](const std::string& n) { return to_py(builtin_course_document(n)); },
        py::arg("name"));
    m.def(
        "validate_course",
        [](const py::handle& course) {
            py::list out;
            for (const auto& f : validate_course(course_from(course))) out.append(to_py(to_json(f)));
            return out;
        },
        py::arg("course"), "Findings for a course given as a built-in name, JSON text or dict");
    m.def(
        "course_hash", [](const py::handle& course) { return to_hex(course_hash(course_from(course))); },
        py::arg("course"));

    py::class_<PySession>(m, "Session")
        .def(py::init<const py::handle&, double, const std::string&>(), py::arg("course"), py::arg("tick_hz") = 50.0,
             py::arg("location") = "")
        .def("apply_input", &PySession::apply_input, py::arg("q") = std::nullopt, py::arg("bend") = std::nullopt,
             py::arg("r_p") = 0.0, py::arg("r_m") = 0.0, py::arg("d") = -1, py::arg("estop") = false,
             "Latch an input for the next tick. Give q=(w, x, y, z) or bend=(kappa, phi).")
        .def("tick", &PySession::tick, py::arg("n") = 1, "Advance n ticks; returns the events")
        .def("estop_clear", [](PySession& s) { s.session_.estop_clear(); })
        .def("disconnect", [](PySession& s) { s.session_.disconnect(); })
        .def(
            "snapshot", [](const PySession& s, std::size_t n) { return to_py(to_json(s.session_.snapshot(n))); },
            py::arg("max_points") = 256)
        .def_property_readonly("tick_count", [](const PySession& s) { return s.session_.tick_count(); })
        .def_property_readonly("state_hash", [](const PySession& s) { return to_hex(s.session_.state_hash()); })
        .def_property_readonly("chain", [](const PySession& s) { return to_hex(s.session_.chain()); })
        .def_property_readonly("total_length", [](const PySession& s) { return s.session_.sim().body.total_length; })
        .def("log", [](const PySession& s) { return log_text(s.record_); }, "Run log so far (NDJSON text)")
        .def("score", [](const PySession& s) { return to_py(to_json(score_run(s.record_, s.session_.course()))); });

    m.def(
        "fly",
        [](const py::handle& course, const std::string& location, double tick_hz) {
            const Course c = course_from(course);
            const Flight f = fly(c, builtin_plan(c.name, location), tick_hz);
            py::list events;
            for (const auto& e : f.events)
                if (e.kind != EventKind::Saturated) events.append(to_py(to_json(e)));
            py::dict out;
            out["completed"] = f.completed;
            out["sim_time"] = f.sim_time;
            out["route_time"] = f.route_time;
            out["length"] = f.route_length;
            out["events"] = events;
            out["score"] = to_py(to_json(score_run(f.record, c)));
            out["log"] = log_text(f.record);
            return out;
        },
        py::arg("course"), py::arg("location") = "", py::arg("tick_hz") = 50.0,
        "Run the built-in scripted pilot and return its summary and log");
    m.def(
        "replay",
        [](const std::string& log, bool verify) {
            const auto r = replay(record_from(log), nullptr, verify);
            py::dict out;
            out["ticks"] = r.ticks;
            out["chain"] = to_hex(r.chain);
            py::list hashes;
            for (auto h : r.hashes) hashes.append(to_hex(h));
            out["hashes"] = hashes;
            out["final"] = to_py(to_json(r.final_snapshot));
            return out;
        },
        py::arg("log"), py::arg("verify") = true);
    m.def(
        "score",
        [](const std::string& log, const py::handle& course) {
            return to_py(to_json(score_run(record_from(log), course_from(course))));
        },
        py::arg("log"), py::arg("course"));
}
