// vinesim command line: serve, drive, replay, score, check, courses.

#include "vinesim/error.hpp"
#include "vinesim/hash.hpp"
#include "vinesim/pilot.hpp"
#include "vinesim/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace vinesim;
using nlohmann::json;

namespace {

json config() { return env_defaults(); }

json course_defaults()
{
    const json cfg = config();
    return cfg.contains("course") ? cfg.at("course") : json::object();
}

json service_defaults()
{
    const json cfg = config();
    return cfg.contains("service") ? cfg.at("service") : json::object();
}

// A path to a course file, or the name of a built-in course.
Course open_course(const std::string& spec)
{
    if (std::filesystem::exists(spec)) return load_course_file(spec, course_defaults());
    for (const auto& n : builtin_course_names())
        if (n == spec) return builtin_course(n, course_defaults());
    throw InvalidInput("'" + spec + "' is neither a course file nor a built-in course");
}

std::size_t location_of(const Course& c, const std::string& name) { return name.empty() ? 0 : c.location_index(name); }

int serve(const std::string& course_spec, ServerOptions opts, const std::string& location)
{
    Course course = open_course(course_spec);
    opts.location = location_of(course, location);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(std::move(course), opts);
    server.start();
    std::cerr << "serving " << course_spec << " on ws://" << opts.address << ":" << server.port() << " at "
              << opts.tick_hz << " Hz";
    if (!opts.log_path.empty()) std::cerr << ", logging to " << opts.log_path;
    std::cerr << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return 0;
}

int drive(const std::string& course_spec, const std::string& location, const std::string& plan_path,
          const std::string& out, double tick_hz)
{
    const Course course = open_course(course_spec);
    FlightPlan plan;
    if (!plan_path.empty()) {
        std::ifstream in(plan_path);
        if (!in) throw InvalidInput("cannot open plan '" + plan_path + "'");
        plan = plan_from_json(json::parse(in));
    } else {
        plan = builtin_plan(course.name, location);
    }
    if (!location.empty()) plan.location = location;
    const Flight f = fly(course, plan, tick_hz);
    const auto score = score_run(f.record, course);
    if (!out.empty()) {
        std::ofstream o(out);
        if (!o) throw InvalidInput("cannot write '" + out + "'");
        auto rec = f.record;
        rec.wall_duration = 0.0;
        rec.final_score = score.total;
        write_log(o, rec);
    }
    json events = json::array();
    for (const auto& e : f.events)
        if (e.kind != EventKind::Saturated) events.push_back(to_json(e));
    json summary{{"completed", f.completed},
                 {"sim_time", f.sim_time},
                 {"route_time", f.route_time},
                 {"length", f.final.total_length},
                 {"mean_growth_cm_s", f.route_time > 0 ? 100.0 * f.route_length / f.route_time : 0.0},
                 {"ticks", f.record.entries.size()},
                 {"chain", to_hex(f.final.chain)},
                 {"events", events},
                 {"score", to_json(score)}};
    std::cout << summary.dump(2) << "\n";
    return f.completed ? 0 : 1;
}

int replay_cmd(const std::string& log, bool verify, const std::string& course_spec)
{
    const RunRecord rec = read_log_file(log);
    std::optional<Course> course;
    if (!course_spec.empty()) course = open_course(course_spec);
    try {
        const auto r = replay(rec, course ? &*course : nullptr, verify);
        json out{{"ticks", r.ticks},
                 {"chain", to_hex(r.chain)},
                 {"verified", verify},
                 {"length", r.final_snapshot.total_length},
                 {"tip", {r.final_snapshot.camera.position.x(), r.final_snapshot.camera.position.y(),
                          r.final_snapshot.camera.position.z()}}};
        std::cout << out.dump(2) << "\n";
    } catch (const ReplayIntegrityError& e) {
        std::cerr << "replay diverged at tick " << e.tick() << ": " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int score_cmd(const std::string& log, const std::string& course_spec)
{
    const RunRecord rec = read_log_file(log);
    const Course course = open_course(course_spec);
    std::cout << to_json(score_run(rec, course)).dump(2) << "\n";
    return 0;
}

struct CheckLine {
    bool ok;
    std::string what;
};

std::vector<CheckLine> check_course(const Course& c)
{
    std::vector<CheckLine> out;
    auto add = [&](bool ok, std::string what) { out.push_back({ok, c.name + ": " + std::move(what)}); };

    std::size_t errors = 0, warnings = 0;
    for (const auto& f : validate_course(c)) {
        (f.severity == Severity::Error ? errors : warnings)++;
        if (f.severity == Severity::Error) std::cerr << "  " << f.path << ": " << f.message << "\n";
    }
    add(errors == 0, "no validation errors (" + std::to_string(warnings) + " warnings)");

    const Course again = load_course(serialize_course(c));
    add(course_hash(load_course(serialize_course(again))) == course_hash(again), "serialization is stable");

    for (const auto& loc : builtin_plan_locations(c.name)) {
        Flight f;
        try {
            f = fly(c, builtin_plan(c.name, loc));
        } catch (const Error& e) {
            add(false, loc + ": scripted run failed: " + e.what());
            continue;
        }
        add(f.completed, loc + ": scripted run reaches its last waypoint");
        std::size_t topples = 0;
        for (const auto& e : f.events) topples += e.kind == EventKind::CylinderToppled;
        // Re-simulate tick by tick so the growth state can be inspected.
        Session s(c, SessionOptions{f.record.tick_hz, c.location_index(loc), true});
        bool tension = true, same = true;
        for (const auto& e : f.record.entries) {
            if (e.estop_clear) s.estop_clear();
            if (e.disconnect) s.disconnect();
            s.apply_input(e.input);
            s.tick();
            const auto& g = s.last_growth();
            tension = tension && g.tension && g.unspool_rate <= g.growth_rate + 1e-9;
            same = same && s.state_hash() == e.state_hash;
        }
        add(same && s.chain() == f.final.chain, loc + ": replay reproduces the hash chain");
        add(tension, loc + ": material stays in tension");
        add(topples == 0, loc + ": no cylinders toppled");
    }
    return out;
}

int check_cmd(const std::vector<std::string>& specs)
{
    std::vector<std::string> names = specs;
    if (names.empty()) names = builtin_course_names();
    bool all = true;
    for (const auto& n : names) {
        for (const auto& line : check_course(open_course(n))) {
            std::cout << (line.ok ? "PASS " : "FAIL ") << line.what << "\n";
            all = all && line.ok;
        }
    }
    return all ? 0 : 1;
}

int courses_cmd(const std::string& dump)
{
    if (!dump.empty()) {
        std::cout << builtin_course_document(dump).dump(2) << "\n";
        return 0;
    }
    for (const auto& n : builtin_course_names()) {
        const Course c = builtin_course(n);
        std::cout << n << "  " << c.meta.value("description", std::string()) << "\n";
        for (const auto& l : c.locations) std::cout << "    location " << l.name << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Vine robot teleoperation simulator"};
    app.require_subcommand(1);

    ServerOptions sopts;
    std::string course_spec, location, log_path, plan_path, out_path, dump;
    bool verify = false;
    double tick_hz = 50.0;
    std::vector<std::string> check_specs;

    try {
        const json svc = service_defaults();
        sopts.tick_hz = svc.value("tick_hz", sopts.tick_hz);
        sopts.port = svc.value("port", sopts.port);
        sopts.address = svc.value("address", sopts.address);
        sopts.broadcast_hz = svc.value("broadcast_hz", sopts.broadcast_hz);
        tick_hz = sopts.tick_hz;
    } catch (const std::exception& e) {
        std::cerr << "error: VINESIM_CONFIG: " << e.what() << "\n";
        return 2;
    }

    auto* serve_cmd = app.add_subcommand("serve", "Run a teleoperation session over WebSocket");
    serve_cmd->add_option("--course", course_spec, "Course file or built-in name")->required();
    serve_cmd->add_option("--port", sopts.port, "TCP port (0 picks one)");
    serve_cmd->add_option("--address", sopts.address, "Listen address");
    serve_cmd->add_option("--tick-hz", sopts.tick_hz, "Simulation rate")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--broadcast-hz", sopts.broadcast_hz, "State message rate")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--location", location, "Start location name");
    serve_cmd->add_option("--log", sopts.log_path, "Write a run log here");

    auto* drive_cmd = app.add_subcommand("drive", "Fly a scripted run and print its summary");
    drive_cmd->add_option("--course", course_spec, "Course file or built-in name")->required();
    drive_cmd->add_option("--location", location, "Start location name");
    drive_cmd->add_option("--plan", plan_path, "Flight plan JSON (default: the built-in plan)");
    drive_cmd->add_option("--out", out_path, "Write the run log here");
    drive_cmd->add_option("--tick-hz", tick_hz, "Simulation rate")->check(CLI::PositiveNumber);

    auto* replay_sub = app.add_subcommand("replay", "Re-simulate a run log");
    replay_sub->add_option("log", log_path, "Run log")->required();
    replay_sub->add_flag("--verify", verify, "Fail on the first tick whose state hash differs");
    replay_sub->add_option("--course", course_spec, "Course to replay on (default: the one embedded in the log)");

    auto* score_sub = app.add_subcommand("score", "Score a run log");
    score_sub->add_option("log", log_path, "Run log")->required();
    score_sub->add_option("--course", course_spec, "Course file or built-in name")->required();

    auto* check_sub = app.add_subcommand("check", "Run the invariant suite on courses");
    check_sub->add_option("courses", check_specs, "Course files or names (default: built-ins)");

    auto* courses_sub = app.add_subcommand("courses", "List built-in courses");
    courses_sub->add_option("--dump", dump, "Print the JSON document of a built-in course");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(course_spec, sopts, location);
        if (*drive_cmd) return drive(course_spec, location, plan_path, out_path, tick_hz);
        if (*replay_sub) return replay_cmd(log_path, verify, course_spec);
        if (*score_sub) return score_cmd(log_path, course_spec);
        if (*check_sub) return check_cmd(check_specs);
        if (*courses_sub) return courses_cmd(dump);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
