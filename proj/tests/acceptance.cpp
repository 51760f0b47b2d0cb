// Acceptance checks. Prints one PASS/FAIL line per criterion; with a name
// argument runs only that criterion. Exit status is non-zero on any FAIL.

#include "vinesim/error.hpp"
#include "vinesim/pilot.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace vinesim;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 6)
{
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

Outcome round_trip()
{
    std::mt19937_64 rng(20180101);
    std::uniform_real_distribution<double> bend(1e-6, kPi - 1e-6), len(0.05, 3.0), ph(-kPi, kPi);
    const auto t0 = Clock::now();
    int bad = 0, beyond_fold = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double s = len(rng);
        const ArcParams a{bend(rng) / s, ph(rng), s};
        double err = 0.0;
        try {
            const ArcParams b = tip_to_arc(arc_to_tip(a), s);
            err = std::max(std::abs(b.kappa - a.kappa), std::abs(wrap_angle(b.phi - a.phi)));
        } catch (const Error&) {
            err = INFINITY;
        }
        worst = std::max(worst, err);
        if (err > 1e-8) {
            ++bad;
            beyond_fold += a.kappa * s > kMaxInvertibleBend;
        }
    }
    const double t = seconds_since(t0);
    return {bad == 0 && t < 1.0, std::to_string(bad) + "/1000 arcs off by more than 1e-8 (" +
                                     std::to_string(beyond_fold) + " of them bent past " +
                                     fmt(kMaxInvertibleBend, 5) + " rad, where the lateral reach folds back); worst " +
                                     fmt(worst, 3) + "; " + fmt(t * 1e3, 3) + " ms"};
}

Outcome pressure_solver()
{
    const auto layout = ActuatorLayout::equally_spaced(0.01, 14.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double deg = kPi / 180.0;
    const double psi[3] = {90 * deg, 210 * deg, 330 * deg};
    int bad = 0;
    double worst_tip = 0, worst_min = 0, worst_oracle = 0;
    for (int i = 0; i < 1000; ++i) {
        // uniform in the inscribed disc of the reachable hexagon
        const double r = std::sqrt(u(rng)) * layout.c * layout.p_max * std::cos(kPi / 6.0) * 0.999;
        const double a = 2 * kPi * u(rng);
        const TipPosition t{r * std::cos(a), r * std::sin(a)};
        const auto sol = solve_pressures(t, layout);
        const auto p = sol.pressures.as_array();
        const auto back = superpose_tip(sol.pressures, layout);
        const double tip_err = std::hypot(back.x - t.x, back.y - t.y);
        // closed form: least-norm solution shifted along (1,1,1) until the smallest is zero
        double q[3];
        for (int k = 0; k < 3; ++k) q[k] = 2.0 / (3.0 * layout.c) * (t.x * std::cos(psi[k]) + t.y * std::sin(psi[k]));
        const double lo = std::min({q[0], q[1], q[2]});
        double oracle = 0;
        for (int k = 0; k < 3; ++k) oracle = std::max(oracle, std::abs(p[k] - (q[k] - lo)));
        const double pmin = sol.pressures.min();
        worst_tip = std::max(worst_tip, tip_err);
        worst_min = std::max(worst_min, pmin);
        worst_oracle = std::max(worst_oracle, oracle);
        if (tip_err > 1e-9 || pmin > 1e-6 || pmin < 0.0 || oracle > 1e-9 || sol.saturated) ++bad;
    }
    return {bad == 0, "tip error " + fmt(worst_tip, 3) + " m, largest min pressure " + fmt(worst_min, 3) +
                          " kPa, oracle gap " + fmt(worst_oracle, 3) + " kPa"};
}

Outcome null_space()
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> p(0.0, 14.0), d(-5.0, 5.0), c(0.005, 0.05);
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < 100; ++i) {
        const auto layout = ActuatorLayout::equally_spaced(c(rng), 14.0);
        const PressureCommand a{p(rng), p(rng), p(rng)};
        const double delta = d(rng);
        const PressureCommand b{a.p1 + delta, a.p2 + delta, a.p3 + delta};
        const auto ta = superpose_tip(a, layout), tb = superpose_tip(b, layout);
        const double diff = std::hypot(ta.x - tb.x, ta.y - tb.y);
        // a few ulps of the largest term in the sum
        const double scale = layout.c * (std::max({a.p1, a.p2, a.p3}) + std::abs(delta)) * 3.0;
        const double tol = 16.0 * std::numeric_limits<double>::epsilon() * scale;
        worst = std::max(worst, diff / scale);
        ok = ok && diff <= tol;
    }
    return {ok, "largest difference " + fmt(worst, 3) + " of the term scale"};
}

Outcome flow_limit()
{
    GrowthConfig g;
    g.q_max = 470.0;
    g.body_radius = 3.75;
    g.v_max = 10.0;
    const double ceiling = flow_limited_speed(g);
    const double top = growth_rate(g.p_body_max, 1e9, g);
    const bool ok = std::abs(ceiling - 10.64) < 0.005 && top == 10.0;
    return {ok, "ceiling " + fmt(ceiling, 6) + " cm/s, effective maximum " + fmt(top, 6) + " cm/s"};
}

Course with_hole(double side_m)
{
    json doc = builtin_course_document("robosoft2018");
    for (auto& o : doc["environment"]["obstacles"])
        if (o["id"] == "aperture") o["hole"] = {side_m, side_m};
    return load_course(doc);
}

Outcome aperture()
{
    const bool r40 = aperture_check(7.0, 4.0) == ApertureResult::Pass;
    const bool r45 = aperture_check(7.0, 4.5) == ApertureResult::Pass;
    const bool r39 = aperture_check(7.0, 3.9) == ApertureResult::Buckle;
    // and through the simulator: grow straight at the course aperture
    FlightPlan plan;
    plan.route = {{Vec3(3.3, 0, 0.1), true}};
    plan.max_time = 120;
    auto crosses = [&](double side) {
        const Flight f = fly(with_hole(side), plan);
        bool buckled = false, through = false;
        for (const auto& e : f.events) {
            buckled = buckled || e.kind == EventKind::ApertureBuckle;
            through = through || (e.kind == EventKind::GoalReached && e.id == "aperture_exit");
        }
        return through && !buckled ? 1 : (!through && buckled ? 0 : -1);
    };
    const int s40 = crosses(0.040), s45 = crosses(0.045), s39 = crosses(0.039);
    const bool ok = r40 && r45 && r39 && s40 == 1 && s45 == 1 && s39 == 0;
    return {ok, std::string("rule 4.0/4.5/3.9 cm: ") + (r40 ? "pass" : "buckle") + "/" + (r45 ? "pass" : "buckle") +
                    "/" + (r39 ? "buckle" : "pass") + "; simulated: " + (s40 == 1 ? "through" : "blocked") + "/" +
                    (s45 == 1 ? "through" : "blocked") + "/" + (s39 == 0 ? "buckled" : "through")};
}

// Records a pilot run as a log, reads it back and replays it with
// verification, the way a saved input script would be used.
std::pair<Flight, RunRecord> recorded_run(const Course& course, const FlightPlan& plan)
{
    Flight f = fly(course, plan);
    std::stringstream log;
    write_log(log, f.record);
    RunRecord rec = read_log(log);
    const auto r = replay(rec, &course, true);
    if (r.chain != f.final.chain) throw ReplayIntegrityError(r.ticks, "chain differs after replay");
    return {std::move(f), std::move(rec)};
}

Outcome robosoft()
{
    const auto t0 = Clock::now();
    const Course course = builtin_course("robosoft2018");
    auto [f, rec] = recorded_run(course, builtin_plan("robosoft2018", "course_start"));
    const auto score = score_run(rec, course);
    const double wall = seconds_since(t0);

    int reached = 0, topples = 0;
    double done_at = 0.0;
    for (const auto& e : f.events) {
        topples += e.kind == EventKind::CylinderToppled;
        if (e.kind == EventKind::GoalReached) {
            ++reached;
            done_at = std::max(done_at, static_cast<double>(e.tick) / rec.tick_hz);
        }
    }
    // length deployed by the time the last obstacle was cleared
    Session s = replay_session(
        [&] {
            RunRecord prefix = rec;
            prefix.entries.resize(static_cast<std::size_t>(std::llround(done_at * rec.tick_hz)));
            return prefix;
        }(),
        &course);
    const double mean = 100.0 * s.sim().body.total_length / done_at;

    bool multipliers = true;
    int all_items = 0;
    for (const auto& it : score.items) {
        all_items += it.reached;
        const bool body_item = it.id != "cylinders";
        multipliers = multipliers && it.multiplier == (body_item ? 0.5 : 1.0);
    }
    const bool ok = reached == 4 && all_items == 4 && topples == 0 && done_at <= 180.0 &&
                    std::abs(mean - 6.0) <= 0.6 && multipliers && wall < 10.0;
    return {ok, std::to_string(reached) + "/4 obstacles, " + std::to_string(topples) + " toppled, done at " +
                    fmt(done_at, 5) + " s, mean growth " + fmt(mean, 4) + " cm/s, score " + fmt(score.total, 5) +
                    "/" + fmt(score.possible, 5) + (multipliers ? " with 0.5x tip-only multiplier" : " (multiplier?)") +
                    ", wall " + fmt(wall, 3) + " s"};
}

Outcome chavin()
{
    const Course course = builtin_course("chavin");
    struct Want {
        const char* loc;
        double length;
        std::vector<std::string> goals;
    };
    const Want wants[] = {{"rock_blockage", 6.0, {"past_rocks", "tunnel_1_end"}},
                          {"right_turn", 5.0, {"turn", "tunnel_2_end"}},
                          {"vertical_shaft", 3.0, {"shaft"}}};
    bool ok = true;
    std::string detail;
    for (const auto& w : wants) {
        auto [f, rec] = recorded_run(course, builtin_plan("chavin", w.loc));
        bool goals = true;
        for (const auto& g : w.goals) {
            bool hit = false;
            for (const auto& e : f.events) hit = hit || (e.kind == EventKind::GoalReached && e.id == g);
            goals = goals && hit;
        }
        bool buckle = false;
        for (const auto& e : f.events) buckle = buckle || e.kind == EventKind::RetractionBuckle;
        const double len = f.route_length;
        const bool this_ok = len >= w.length && goals && (std::string(w.loc) != "right_turn" || buckle);
        ok = ok && this_ok;
        detail += std::string(w.loc) + " " + fmt(len, 3) + " m" + (goals ? "" : " (goal missed)");
        if (std::string(w.loc) == "right_turn") detail += buckle ? " + retraction buckle" : " (no retraction buckle)";
        detail += "; ";
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

TeleopInput random_input(std::mt19937_64& rng, double adc_max)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0), pot(0.0, adc_max), coin(0.0, 1.0);
    TeleopInput in;
    in.q = Quaternion{1.0 + u(rng), u(rng), u(rng), u(rng)};
    if (in.q.norm() < 1e-3) in.q = {};
    in.r_p = pot(rng);
    in.r_m = pot(rng);
    in.d = coin(rng) < 0.7 ? Direction::Growth : Direction::Retraction;
    in.estop = coin(rng) < 0.01;
    return in;
}

Outcome anti_slack()
{
    Session s(builtin_course("robosoft2018"));
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const double adc = s.course().robot.growth.adc_max;
    int violations = 0, slack = 0, growing = 0;
    for (int i = 0; i < 10000; ++i) {
        s.apply_input(random_input(rng, adc));
        if (coin(rng) < 0.05) s.estop_clear();
        s.tick();
        const auto& g = s.last_growth();
        violations += g.unspool_rate > g.growth_rate + 1e-12;
        if (g.growth_rate > 0.0) {
            ++growing;
            slack += !g.tension;
        }
    }
    return {violations == 0 && slack == 0 && growing > 1000,
            std::to_string(violations) + " ticks unspooling faster than growth, " + std::to_string(slack) +
                " slack ticks out of " + std::to_string(growing) + " growing"};
}

Outcome vents_on_estop()
{
    std::mt19937_64 rng(1234);
    const Course course = builtin_course("robosoft2018");
    int bad_estop = 0, bad_disconnect = 0, trials = 0;
    for (int t = 0; t < 100; ++t) {
        for (int mode = 0; mode < 2; ++mode) {
            Session s(course);
            const int n = std::uniform_int_distribution<int>(1, 300)(rng);
            for (int i = 0; i < n; ++i) {
                auto in = random_input(rng, 1023);
                in.estop = false;
                s.apply_input(in);
                s.tick();
            }
            auto in = random_input(rng, 1023);
            in.estop = mode == 0;
            s.apply_input(in);
            if (mode == 1) s.disconnect();
            s.tick();
            const auto snap = s.snapshot();
            const bool zero = snap.p_body == 0.0 && snap.steering.p1 == 0.0 && snap.steering.p2 == 0.0 &&
                              snap.steering.p3 == 0.0 && snap.estop;
            (mode == 0 ? bad_estop : bad_disconnect) += !zero;
            ++trials;
        }
    }
    return {bad_estop == 0 && bad_disconnect == 0,
            std::to_string(trials) + " fuzzed states; " + std::to_string(bad_estop) + " estop and " +
                std::to_string(bad_disconnect) + " disconnect cases left pressure on"};
}

Outcome replay_determinism()
{
    const Course course = builtin_course("robosoft2018");
    bool ok = true;
    std::string detail;
    for (double hz : {25.0, 50.0, 100.0}) {
        Session s(course, {hz});
        RunRecord rec = s.record_header();
        s.on_entry = [&](const RunEntry& e) { rec.entries.push_back(e); };
        std::mt19937_64 rng(static_cast<std::uint64_t>(hz));
        for (int i = 0; i < static_cast<int>(40 * hz); ++i) {
            if (i % 5 == 0) {
                auto in = random_input(rng, 1023);
                in.estop = false;
                s.apply_input(in);
            }
            if (i == static_cast<int>(20 * hz)) s.disconnect();
            if (i == static_cast<int>(21 * hz)) s.estop_clear();
            s.tick();
        }
        std::stringstream log;
        write_log(log, rec);
        const RunRecord back = read_log(log);
        bool same = false;
        try {
            const auto a = replay(back, &course, true);
            const auto b = replay(back, nullptr, true);
            same = a.chain == b.chain && a.hashes == b.hashes && a.chain == s.chain();
        } catch (const Error& e) {
            detail += std::string(e.what()) + " ";
        }
        ok = ok && same;
        detail += fmt(hz, 3) + " Hz: " + (same ? "identical" : "DIFFERENT") + " over " +
                  std::to_string(rec.entries.size()) + " ticks; ";
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all = {
        {"round_trip", round_trip},       {"pressure_solver", pressure_solver},
        {"null_space", null_space},       {"flow_limited_growth", flow_limit},
        {"aperture_rule", aperture},      {"robosoft_run", robosoft},
        {"chavin_runs", chavin},          {"anti_slack_fuzz", anti_slack},
        {"estop", vents_on_estop},                 {"replay_determinism", replay_determinism},
    };
    const std::string only = argc > 1 ? argv[1] : "";
    bool any = false, failed = false;
    for (const auto& c : all) {
        if (!only.empty() && only != c.name) continue;
        any = true;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
        failed = failed || !o.pass;
    }
    if (!any) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    return failed ? 1 : 0;
}
