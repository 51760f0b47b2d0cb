#include "vinesim/teleop.hpp"

#include "vinesim/error.hpp"
#include "vinesim/hash.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

namespace vinesim {

using nlohmann::json;

namespace {

Course normalised(Course c)
{
    if (c.document.is_null()) return load_course(serialize_course(c));
    return c;
}

void check_input(const TeleopInput& in, const GrowthConfig& g)
{
    const auto& q = in.q;
    if (!std::isfinite(q.w) || !std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.z))
        throw InvalidInput("joystick quaternion is not finite");
    if (!(q.norm() > 1e-9)) throw InvalidInput("joystick quaternion has zero norm");
    for (double r : {in.r_p, in.r_m})
        if (!std::isfinite(r) || r < 0.0 || r > g.adc_max)
            throw InvalidInput("pot reading outside the ADC range [0, " + std::to_string(g.adc_max) + "]");
    if (in.d != Direction::Growth && in.d != Direction::Retraction)
        throw InvalidInput("direction must be -1 (growth) or 1 (retraction)");
}

std::vector<Vec3> decimate(const std::vector<Vec3>& pts, std::size_t max_points)
{
    max_points = std::max<std::size_t>(max_points, 2);
    if (pts.size() <= max_points) return pts;
    std::vector<Vec3> out;
    out.reserve(max_points);
    const double step = static_cast<double>(pts.size() - 1) / static_cast<double>(max_points - 1);
    for (std::size_t i = 0; i < max_points; ++i) {
        const auto k = static_cast<std::size_t>(std::llround(step * static_cast<double>(i)));
        out.push_back(pts[std::min(k, pts.size() - 1)]);
    }
    out.back() = pts.back();
    return out;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 3) throw ParseError(path, "expected [x, y, z]");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ParseError(path + "/" + std::to_string(i), "expected a number");
        v[i] = j[i].get<double>();
    }
    return v;
}

double num(const json& j, const char* key, const std::string& path)
{
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(path + "/" + key, "missing");
    if (!it->is_number()) throw ParseError(path + "/" + key, "expected a number");
    return it->get<double>();
}

bool flag(const json& j, const char* key, const std::string& path, bool fallback = false)
{
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) throw ParseError(path + "/" + key, "expected a boolean");
    return it->get<bool>();
}

std::uint64_t hex_field(const json& j, const char* key, const std::string& path)
{
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(path + "/" + key, "expected a hex string");
    try {
        return from_hex(it->get<std::string>());
    } catch (const InvalidInput& e) {
        throw ParseError(path + "/" + key, e.what());
    }
}

}  // namespace

std::uint64_t chain_seed(std::uint64_t course_hash, double tick_hz, const std::string& location)
{
    return Fnv1a().add(course_hash).add(tick_hz).add(std::string_view(location)).value();
}

std::uint64_t chain_step(std::uint64_t chain, std::uint64_t state_hash) { return Fnv1a().add(chain).add(state_hash).value(); }

Session::Session(Course course, SessionOptions options) : course_(normalised(std::move(course))), options_(options)
{
    if (!(options_.tick_hz > 0.0) || !std::isfinite(options_.tick_hz)) throw InvalidInput("tick_hz must be positive");
    if (options_.location >= course_.locations.size())
        throw InvalidInput("course has no location " + std::to_string(options_.location));
    for (const auto& f : validate_course(course_))
        if (f.severity == Severity::Error) throw ValidationError(f.path + ": " + f.message);
    body_cfg_ = course_.robot.body_config();
    const double max_step = course_.robot.growth.v_max * 0.01 / options_.tick_hz;
    if (max_step > 0.1 * body_cfg_.l_ctrl) throw InvalidInput("tick_hz too low for the maximum growth speed");
    course_hash_ = vinesim::course_hash(course_);
    sim_ = {BodyState::at(course_.start_pose(options_.location), body_cfg_),
            WorldState::for_environment(course_.environment), 0};
    input_.r_p = course_.robot.growth.r_p0;
    input_.r_m = course_.robot.growth.r_m0;
    state_hash_ = compute_hash();
    chain_ = chain_seed(course_hash_, options_.tick_hz, course_.locations[options_.location].name);
}

void Session::apply_input(const TeleopInput& input)
{
    check_input(input, course_.robot.growth);
    input_ = input;
}

void Session::estop_clear() { clear_pending_ = true; }

void Session::disconnect() { disconnect_pending_ = true; }

std::vector<Event> Session::tick()
{
    const std::uint64_t t = sim_.tick + 1;
    sim_.tick = t;
    const bool cleared = clear_pending_;
    const bool dropped = disconnect_pending_;
    clear_pending_ = disconnect_pending_ = false;
    if (cleared) estopped_ = false;
    if (dropped || input_.estop) estopped_ = true;

    std::vector<Event> events;
    const auto& robot = course_.robot;
    bool saturated = false;
    if (estopped_) {
        steering_ = {};
    } else {
        const ArcParams joy = quat_to_arc(input_.q.normalized(), robot.joystick_length);
        const TipPosition tip = arc_to_tip(joy);
        const PressureSolution sol = solve_pressures(tip, robot.layout);
        const SaturatedCommand sat = saturate(sol.pressures, robot.layout);
        steering_ = sat.pressures;
        saturated = sol.saturated || sat.clamped;
    }
    if (saturated && !saturated_) events.push_back({EventKind::Saturated, "", t, camera_pose(sim_.body).position});
    saturated_ = saturated;

    last_growth_ = advance_growth(growth_, {input_.r_p, input_.r_m, input_.d, estopped_}, dt(), robot.growth,
                                  options_.guard);
    auto body_events = step(sim_, course_.environment, body_cfg_, steering_, last_growth_.signed_rate(), dt());
    events.insert(events.end(), body_events.begin(), body_events.end());
    growth_.length = sim_.body.total_length;

    state_hash_ = compute_hash();
    chain_ = chain_step(chain_, state_hash_);
    pending_events_.insert(pending_events_.end(), events.begin(), events.end());

    if (on_entry) on_entry(RunEntry{t, input_, cleared, dropped, state_hash_, events});
    return events;
}

std::uint64_t Session::compute_hash() const
{
    Fnv1a h(state_digest(sim_));
    const auto& g = growth_;
    h.add(g.p_body).add(g.omega).add(g.omega_d).add(g.u).add(g.integ).add(g.last_error).add(g.has_error);
    h.add(g.length).add(g.tension);
    h.add(steering_.p1).add(steering_.p2).add(steering_.p3);
    h.add(estopped_).add(saturated_);
    return h.value();
}

Snapshot Session::snapshot(std::size_t max_points) const
{
    Snapshot s;
    s.tick = sim_.tick;
    s.time = static_cast<double>(sim_.tick) / options_.tick_hz;
    s.total_length = sim_.body.total_length;
    s.backbone = decimate(backbone_polyline(sim_.body), max_points);
    s.camera = camera_pose(sim_.body);
    s.p_body = growth_.p_body;
    s.steering = steering_;
    s.omega_d = growth_.omega_d;
    s.omega = growth_.omega;
    s.u = growth_.u;
    s.growth_rate = last_growth_.signed_rate();
    s.events = pending_events_;
    s.saturated = saturated_;
    s.estop = estopped_;
    s.state_hash = state_hash_;
    s.chain = chain_;
    return s;
}

Snapshot Session::drain_snapshot(std::size_t max_points)
{
    Snapshot s = snapshot(max_points);
    pending_events_.clear();
    return s;
}

RunRecord Session::record_header() const
{
    RunRecord r;
    r.course_hash = course_hash_;
    r.format = kCourseFormat;
    r.tick_hz = options_.tick_hz;
    r.location = course_.locations[options_.location].name;
    r.course = course_.document;
    return r;
}

// ---- protocol -------------------------------------------------------------

json to_json(const TeleopInput& in)
{
    return {{"q", json::array({in.q.w, in.q.x, in.q.y, in.q.z})},
            {"r_p", in.r_p},
            {"r_m", in.r_m},
            {"d", static_cast<int>(in.d)},
            {"estop", in.estop}};
}

namespace {

TeleopInput input_fields(const json& j, const std::string& path, const Quaternion* q_override)
{
    if (!j.is_object()) throw ParseError(path, "expected an object");
    TeleopInput in;
    if (q_override) {
        in.q = *q_override;
    } else {
        auto it = j.find("q");
        if (it == j.end()) throw ParseError(path + "/q", "missing (send q or bend)");
        if (!it->is_array() || it->size() != 4) throw ParseError(path + "/q", "expected [w, x, y, z]");
        for (std::size_t i = 0; i < 4; ++i)
            if (!(*it)[i].is_number()) throw ParseError(path + "/q/" + std::to_string(i), "expected a number");
        in.q = {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(), (*it)[3].get<double>()};
    }
    if (j.contains("r_p")) in.r_p = num(j, "r_p", path);
    if (j.contains("r_m")) in.r_m = num(j, "r_m", path);
    if (j.contains("d")) {
        const auto& d = j.at("d");
        if (!d.is_number_integer() || (d.get<int>() != -1 && d.get<int>() != 1))
            throw ParseError(path + "/d", "expected -1 (growth) or 1 (retraction)");
        in.d = static_cast<Direction>(d.get<int>());
    }
    in.estop = flag(j, "estop", path);
    return in;
}

}  // namespace

TeleopInput input_from_json(const json& j, const std::string& path) { return input_fields(j, path, nullptr); }

ClientMessage parse_client_message(const std::string& text, double joystick_length)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("", "expected an object");
    auto type = j.find("type");
    if (type == j.end() || !type->is_string()) throw ParseError("/type", "missing message type");
    const std::string t = type->get<std::string>();
    if (t == "estop_clear") return EstopClearMessage{};
    if (t == "join") {
        const std::string mode = j.value("mode", std::string("observe"));
        if (mode == "operate") return JoinMessage{JoinMode::Operate};
        if (mode == "observe") return JoinMessage{JoinMode::Observe};
        throw ParseError("/mode", "expected 'operate' or 'observe'");
    }
    if (t == "input") {
        if (j.contains("bend")) {
            const auto& b = j.at("bend");
            if (!b.is_object()) throw ParseError("/bend", "expected {kappa, phi}");
            const double kappa = num(b, "kappa", "/bend");
            const double phi = num(b, "phi", "/bend");
            if (!std::isfinite(kappa) || !std::isfinite(phi) || kappa < 0.0)
                throw ParseError("/bend", "kappa must be finite and non-negative");
            if (kappa * joystick_length >= std::numbers::pi) throw ParseError("/bend/kappa", "bend beyond pi");
            const Quaternion q = bend_to_quat(kappa, phi, joystick_length);
            return InputMessage{input_fields(j, "", &q)};
        }
        return InputMessage{input_fields(j, "", nullptr)};
    }
    throw ParseError("/type", "unknown message type '" + t + "'");
}

json to_json(const Event& e)
{
    return {{"kind", to_string(e.kind)}, {"id", e.id}, {"tick", e.tick}, {"position", vec_json(e.position)}};
}

Event event_from_json(const json& j, const std::string& path)
{
    if (!j.is_object()) throw ParseError(path, "expected an event object");
    Event e;
    auto k = j.find("kind");
    if (k == j.end() || !k->is_string()) throw ParseError(path + "/kind", "missing");
    auto kind = event_kind_from_string(k->get<std::string>());
    if (!kind) throw ParseError(path + "/kind", "unknown event kind");
    e.kind = *kind;
    e.id = j.value("id", std::string());
    auto t = j.find("tick");
    if (t == j.end() || !t->is_number_unsigned()) throw ParseError(path + "/tick", "expected a tick count");
    e.tick = t->get<std::uint64_t>();
    if (j.contains("position")) e.position = vec_from(j.at("position"), path + "/position");
    return e;
}

json to_json(const Snapshot& s)
{
    json backbone = json::array();
    for (const auto& p : s.backbone) backbone.push_back(vec_json(p));
    json events = json::array();
    for (const auto& e : s.events) events.push_back(to_json(e));
    const auto& q = s.camera.orientation;
    return {{"tick", s.tick},
            {"time", s.time},
            {"total_length", s.total_length},
            {"backbone", backbone},
            {"camera", {{"position", vec_json(s.camera.position)}, {"orientation", {q.w(), q.x(), q.y(), q.z()}}}},
            {"pressures", {{"body", s.p_body}, {"p1", s.steering.p1}, {"p2", s.steering.p2}, {"p3", s.steering.p3}}},
            {"motor", {{"omega_d", s.omega_d}, {"omega", s.omega}, {"u", s.u}}},
            {"growth_rate", s.growth_rate},
            {"events", events},
            {"saturated", s.saturated},
            {"estop", s.estop},
            {"state_hash", to_hex(s.state_hash)},
            {"chain", to_hex(s.chain)}};
}

Snapshot snapshot_from_json(const json& j)
{
    Snapshot s;
    if (!j.is_object()) throw ParseError("", "expected a snapshot object");
    s.tick = j.at("tick").get<std::uint64_t>();
    s.time = num(j, "time", "");
    s.total_length = num(j, "total_length", "");
    const auto& bb = j.at("backbone");
    for (std::size_t i = 0; i < bb.size(); ++i) s.backbone.push_back(vec_from(bb[i], "/backbone/" + std::to_string(i)));
    const auto& cam = j.at("camera");
    s.camera.position = vec_from(cam.at("position"), "/camera/position");
    const auto& o = cam.at("orientation");
    s.camera.orientation = Eigen::Quaterniond(o[0].get<double>(), o[1].get<double>(), o[2].get<double>(), o[3].get<double>());
    const auto& p = j.at("pressures");
    s.p_body = num(p, "body", "/pressures");
    s.steering = {num(p, "p1", "/pressures"), num(p, "p2", "/pressures"), num(p, "p3", "/pressures")};
    const auto& m = j.at("motor");
    s.omega_d = num(m, "omega_d", "/motor");
    s.omega = num(m, "omega", "/motor");
    s.u = num(m, "u", "/motor");
    s.growth_rate = num(j, "growth_rate", "");
    const auto& ev = j.at("events");
    for (std::size_t i = 0; i < ev.size(); ++i) s.events.push_back(event_from_json(ev[i], "/events/" + std::to_string(i)));
    s.saturated = flag(j, "saturated", "");
    s.estop = flag(j, "estop", "");
    s.state_hash = hex_field(j, "state_hash", "");
    s.chain = hex_field(j, "chain", "");
    return s;
}

json state_message(const Snapshot& s)
{
    json j = to_json(s);
    j["type"] = "state";
    return j;
}

json event_message(const Event& e)
{
    json j = to_json(e);
    j["type"] = "event";
    return j;
}

json score_message(const ScoreBreakdown& s)
{
    json j = to_json(s);
    j["type"] = "score";
    return j;
}

json error_message(const std::string& reason) { return {{"type", "error"}, {"reason", reason}}; }

// ---- log ------------------------------------------------------------------

namespace {

json header_json(const RunRecord& r)
{
    return {{"type", "header"},
            {"format", r.format},
            {"course_hash", to_hex(r.course_hash)},
            {"tick_hz", r.tick_hz},
            {"location", r.location},
            {"course", r.course}};
}

json entry_json(const RunEntry& e)
{
    json events = json::array();
    for (const auto& ev : e.events) events.push_back(to_json(ev));
    json j{{"tick", e.tick}, {"input", to_json(e.input)}, {"state_hash", to_hex(e.state_hash)}, {"events", events}};
    if (e.estop_clear) j["estop_clear"] = true;
    if (e.disconnect) j["disconnect"] = true;
    return j;
}

RunEntry entry_from(const json& j, const std::string& path)
{
    RunEntry e;
    auto t = j.find("tick");
    if (t == j.end() || !t->is_number_unsigned()) throw ParseError(path + "/tick", "expected a tick count");
    e.tick = t->get<std::uint64_t>();
    auto in = j.find("input");
    if (in == j.end()) throw ParseError(path + "/input", "missing");
    e.input = input_from_json(*in, path + "/input");
    e.estop_clear = flag(j, "estop_clear", path);
    e.disconnect = flag(j, "disconnect", path);
    e.state_hash = hex_field(j, "state_hash", path);
    if (j.contains("events")) {
        const auto& ev = j.at("events");
        if (!ev.is_array()) throw ParseError(path + "/events", "expected an array");
        for (std::size_t i = 0; i < ev.size(); ++i)
            e.events.push_back(event_from_json(ev[i], path + "/events/" + std::to_string(i)));
    }
    return e;
}

}  // namespace

LogWriter::LogWriter(std::ostream& out, const RunRecord& header) : out_(out) { out_ << header_json(header).dump() << '\n'; }

void LogWriter::write(const RunEntry& e) { out_ << entry_json(e).dump() << '\n'; }

void LogWriter::finish(double wall_duration, std::optional<double> score)
{
    json j{{"type", "summary"}, {"wall_duration", wall_duration}};
    if (score) j["score"] = *score;
    out_ << j.dump() << '\n';
    out_.flush();
}

void write_log(std::ostream& out, const RunRecord& record)
{
    LogWriter w(out, record);
    for (const auto& e : record.entries) w.write(e);
    if (record.wall_duration) w.finish(*record.wall_duration, record.final_score);
}

RunRecord read_log(std::istream& in)
{
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(std::move(line));
    if (lines.empty()) throw ParseError("line 1", "empty log");

    RunRecord r;
    json header;
    try {
        header = json::parse(lines[0]);
    } catch (const json::parse_error& e) {
        throw ParseError("line 1", std::string("malformed header: ") + e.what());
    }
    if (header.value("type", std::string()) != "header") throw ParseError("line 1", "first line is not a header");
    if (!header.contains("format") || !header.at("format").is_number_integer())
        throw ParseError("line 1/format", "missing");
    r.format = header.at("format").get<int>();
    if (r.format != kCourseFormat) throw ParseError("line 1/format", "unsupported format " + std::to_string(r.format));
    r.course_hash = hex_field(header, "course_hash", "line 1");
    r.tick_hz = num(header, "tick_hz", "line 1");
    r.location = header.value("location", std::string());
    if (!header.contains("course")) throw ParseError("line 1/course", "missing");
    r.course = header.at("course");

    std::uint64_t last_tick = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string where = "line " + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error&) {
            if (i + 1 == lines.size()) break;  // cut off mid-write
            throw ParseError(where, "malformed record");
        }
        if (j.value("type", std::string()) == "summary") {
            if (j.contains("wall_duration")) r.wall_duration = num(j, "wall_duration", where);
            if (j.contains("score")) r.final_score = num(j, "score", where);
            continue;
        }
        RunEntry e = entry_from(j, where);
        if (e.tick <= last_tick) throw ParseError(where + "/tick", "ticks must be strictly increasing");
        last_tick = e.tick;
        r.entries.push_back(std::move(e));
    }
    return r;
}

RunRecord read_log_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open log '" + path + "'");
    return read_log(in);
}

namespace {

Course course_for(const RunRecord& record, const Course* course)
{
    if (record.format != kCourseFormat) throw ValidationError("unsupported log format");
    if (course) {
        if (course_hash(*course) != record.course_hash)
            throw ValidationError("log was recorded on a different course (log " + to_hex(record.course_hash) +
                                  ", course " + to_hex(course_hash(*course)) + ")");
        return *course;
    }
    Course c = load_course(record.course);
    if (course_hash(c) != record.course_hash) throw ValidationError("embedded course does not match its hash");
    return c;
}

Session session_for(const RunRecord& record, const Course* course)
{
    Course c = course_for(record, course);
    const std::size_t loc = record.location.empty() ? 0 : c.location_index(record.location);
    return Session(std::move(c), SessionOptions{record.tick_hz, loc, true});
}

void feed(Session& s, const RunEntry& e)
{
    if (e.tick != s.tick_count() + 1)
        throw ReplayIntegrityError(e.tick, "expected tick " + std::to_string(s.tick_count() + 1));
    if (e.estop_clear) s.estop_clear();
    if (e.disconnect) s.disconnect();
    s.apply_input(e.input);
}

}  // namespace

ReplayResult replay(const RunRecord& record, const Course* course, bool verify)
{
    Session s = session_for(record, course);
    ReplayResult out;
    out.rerun = s.record_header();
    s.on_entry = [&](const RunEntry& e) { out.rerun.entries.push_back(e); };
    for (const auto& e : record.entries) {
        feed(s, e);
        s.tick();
        out.hashes.push_back(s.state_hash());
        if (verify && s.state_hash() != e.state_hash)
            throw ReplayIntegrityError(e.tick, "state hash " + to_hex(s.state_hash()) + " differs from recorded " +
                                                   to_hex(e.state_hash));
    }
    out.ticks = s.tick_count();
    out.chain = s.chain();
    out.final_snapshot = s.snapshot();
    return out;
}

Session replay_session(const RunRecord& record, const Course* course)
{
    Session s = session_for(record, course);
    for (const auto& e : record.entries) {
        feed(s, e);
        s.tick();
    }
    return s;
}

}  // namespace vinesim
