#include <doctest.h>

#include "vinesim/error.hpp"
#include "vinesim/growth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace vinesim;
using doctest::Approx;

TEST_CASE("pot_to_pressure")
{
    GrowthConfig cfg;
    cfg.c_p = 0.05;
    cfg.r_p0 = 100.0;
    CHECK(pot_to_pressure(100.0, cfg) == 0.0);
    CHECK(pot_to_pressure(380.0, cfg) == Approx(14.0));
    CHECK(pot_to_pressure(50.0, cfg) == 0.0);
    CHECK(pot_to_pressure(1000.0, cfg) == cfg.p_body_max);
}

TEST_CASE("pot_to_speed")
{
    GrowthConfig cfg;
    cfg.c_m = 0.02;
    cfg.r_m0 = 10.0;
    CHECK(pot_to_speed(10.0, Direction::Growth, cfg) == 0.0);
    CHECK(pot_to_speed(110.0, Direction::Growth, cfg) == Approx(-2.0));
    CHECK(pot_to_speed(110.0, Direction::Retraction, cfg) == Approx(2.0));
}

TEST_CASE("pi_motor examples")
{
    GrowthConfig cfg;
    GrowthState st;
    CHECK(pi_motor(1.5, 1.5, st, 0.02, cfg) == 0.0);

    cfg.k_p = 1.0;
    cfg.k_i = 0.0;
    GrowthState st2;
    CHECK(pi_motor(1.0, 0.5, st2, 0.02, cfg) == Approx(0.5));

    cfg.k_p = 0.0;
    cfg.k_i = 2.0;
    GrowthState st3;
    double u = 0.0;
    for (int i = 0; i < 50; ++i) u = pi_motor(0.1, 0.0, st3, 0.02, cfg);
    CHECK(u == Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(pi_motor(0.0, 0.0, st3, 0.0, cfg), InvalidInput);
}

TEST_CASE("pi_motor: proportional path is exact and integral is trapezoidal")
{
    GrowthConfig cfg;
    cfg.k_p = 0.7;
    cfg.k_i = 0.0;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> e(-2.0, 2.0);
    GrowthState st;
    for (int i = 0; i < 500; ++i) {
        const double wd = e(rng);
        const double w = e(rng);
        CHECK(pi_motor(wd, w, st, 0.02, cfg) == cfg.k_p * (wd - w));
    }

    cfg.k_p = 0.0;
    cfg.k_i = 1.0;
    GrowthState acc;
    std::vector<double> errs;
    const double dt = 0.01;
    for (int i = 0; i < 400; ++i) {
        const double err = 0.5 * std::sin(0.05 * i);
        errs.push_back(err);
        pi_motor(err, 0.0, acc, dt, cfg);
    }
    // Trapezoidal sum with the first sample as its own predecessor.
    double trap = 0.0;
    for (std::size_t i = 0; i < errs.size(); ++i) trap += 0.5 * ((i ? errs[i - 1] : errs[0]) + errs[i]) * dt;
    CHECK(std::abs(acc.integ - trap) < 1e-12);
}

TEST_CASE("pi_motor: integral is clamped")
{
    GrowthConfig cfg;
    GrowthState st;
    for (int i = 0; i < 10000; ++i) pi_motor(100.0, 0.0, st, 0.02, cfg);
    CHECK(cfg.k_i * st.integ == Approx(cfg.u_max));
}

TEST_CASE("backdrive_guard")
{
    GrowthConfig cfg;
    cfg.coulomb_u = 0.3;
    CHECK(backdrive_guard(2.5, cfg) == 2.5);
    CHECK(backdrive_guard(-9.0, cfg) == -0.3);
    CHECK(backdrive_guard(0.0, cfg) == 0.0);
}

TEST_CASE("growth_rate")
{
    GrowthConfig cfg;
    cfg.q_max = 470.0;
    cfg.body_radius = 3.75;
    cfg.v_max = 10.0;
    CHECK(growth_rate(cfg.p_grow - 0.1, 100.0, cfg) == 0.0);

    // 470 / (pi * 3.75^2)
    CHECK(flow_limited_speed(cfg) == Approx(470.0 / (std::numbers::pi * 14.0625)).epsilon(1e-12));
    CHECK(flow_limited_speed(cfg) == Approx(10.64).epsilon(1e-3));
    CHECK(growth_rate(cfg.p_body_max, 100.0, cfg) == 10.0);

    GrowthConfig open = cfg;
    open.q_max = 1e9;
    open.v_max = 1e9;
    CHECK(growth_rate(open.p_body_max, 2.0, open) == 2.0);
}

TEST_CASE("growth_rate: threshold, ceiling and monotonicity")
{
    GrowthConfig cfg;
    cfg.body_radius = 5.0;  // flow ceiling below v_max
    const double ceiling = flow_limited_speed(cfg);
    REQUIRE(ceiling < cfg.v_max);
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double p = cfg.p_body_max * i / 1000.0;
        const double v = growth_rate(p, 1e9, cfg);
        if (p < cfg.p_grow) CHECK(v == 0.0);
        CHECK(v <= ceiling);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("estop zeroes pressure and voltage and is idempotent")
{
    GrowthState st;
    st.p_body = 12.0;
    st.u = 3.0;
    st.integ = 0.4;
    const auto a = estop(st);
    CHECK(a.p_body == 0.0);
    CHECK(a.u == 0.0);
    CHECK(a.integ == 0.0);
    const auto b = estop(a);
    CHECK(b.p_body == a.p_body);
    CHECK(b.u == a.u);
    CHECK(b.integ == a.integ);
}

TEST_CASE("advance_growth: stationary with zero inputs")
{
    GrowthConfig cfg;
    GrowthState st;
    for (int i = 0; i < 100; ++i) {
        const auto t = advance_growth(st, {0.0, 0.0, Direction::Growth, false}, 0.02, cfg);
        CHECK(t.signed_rate() == 0.0);
    }
}

TEST_CASE("advance_growth: motor restrains growth to the commanded speed")
{
    GrowthConfig cfg;
    GrowthState st;
    // Pressure alone would give 6.5 cm/s; the speed pot asks for 4 cm/s, far
    // enough below that the loop settles in braking rather than cycling
    // through the guard.
    const double r_p = (cfg.p_grow + 0.65 * (cfg.p_body_max - cfg.p_grow)) / cfg.c_p;
    const double r_m = (4.0 / cfg.spool_radius) / cfg.c_m;
    GrowthTick t;
    for (int i = 0; i < 500; ++i) t = advance_growth(st, {r_p, r_m, Direction::Growth, false}, 0.02, cfg);
    CHECK(t.growth_rate == Approx(4.0).epsilon(1e-3));
    CHECK(t.tension);

    // Asking for more than pressure provides leaves growth pressure-limited.
    const double r_m_fast = (9.0 / cfg.spool_radius) / cfg.c_m;
    for (int i = 0; i < 500; ++i) t = advance_growth(st, {r_p, r_m_fast, Direction::Growth, false}, 0.02, cfg);
    CHECK(t.growth_rate == Approx(6.5).epsilon(1e-6));
    CHECK(t.guard_active);
    CHECK(t.tension);
}

TEST_CASE("advance_growth: retraction direction reels material in")
{
    GrowthConfig cfg;
    GrowthState st;
    const double r_m = (2.0 / cfg.spool_radius) / cfg.c_m;
    GrowthTick t;
    for (int i = 0; i < 500; ++i) t = advance_growth(st, {0.0, r_m, Direction::Retraction, false}, 0.02, cfg);
    CHECK(t.retraction_rate == Approx(2.0).epsilon(1e-3));
    CHECK(t.growth_rate == 0.0);
}

TEST_CASE("anti-slack: guarded loop keeps tension, unguarded loop does not")
{
    GrowthConfig cfg;
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> pot(0.0, cfg.adc_max);
    std::bernoulli_distribution flip(0.05);

    GrowthState guarded;
    GrowthState unguarded;
    GrowthCommand cmd{pot(rng), pot(rng), Direction::Growth, false};
    bool unguarded_slack = false;
    for (int i = 0; i < 10000; ++i) {
        if (flip(rng)) cmd.r_p = pot(rng);
        if (flip(rng)) cmd.r_m = pot(rng);
        if (flip(rng)) cmd.d = cmd.d == Direction::Growth ? Direction::Retraction : Direction::Growth;
        const auto g = advance_growth(guarded, cmd, 0.02, cfg, true);
        CHECK(g.unspool_rate <= g.growth_rate + 1e-9);
        if (g.growth_rate > 0.0) CHECK(g.tension);
        const auto u = advance_growth(unguarded, cmd, 0.02, cfg, false);
        if (!u.tension) unguarded_slack = true;
    }
    CHECK(unguarded_slack);
}

TEST_CASE("config validation")
{
    GrowthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.p_grow = cfg.p_body_max;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    GrowthConfig neg;
    neg.k_p = -1.0;
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}
