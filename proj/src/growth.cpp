#include "vinesim/growth.hpp"

#include "vinesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vinesim {

void GrowthConfig::validate() const
{
    const double positives[] = {adc_max, c_p, c_m, k_p, p_grow, p_body_max, q_max, body_radius,
                                v_max, coulomb_u, spool_radius, u_max, motor_gain, motor_tau};
    for (double v : positives)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("growth gains and limits must be positive");
    if (!(k_i >= 0.0)) throw ConfigError("k_i must be non-negative");
    if (!(p_grow < p_body_max)) throw ConfigError("p_grow must be below p_body_max");
}

double pot_to_pressure(double r_p, const GrowthConfig& cfg)
{
    return std::clamp(cfg.c_p * (r_p - cfg.r_p0), 0.0, cfg.p_body_max);
}

double pot_to_speed(double r_m, Direction d, const GrowthConfig& cfg)
{
    return static_cast<int>(d) * cfg.c_m * (r_m - cfg.r_m0);
}

double pi_motor(double omega_d, double omega, GrowthState& state, double dt, const GrowthConfig& cfg)
{
    if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
    const double err = omega_d - omega;
    const double prev = state.has_error ? state.last_error : err;
    state.integ += 0.5 * (prev + err) * dt;
    if (cfg.k_i > 0.0) {
        const double cap = cfg.u_max / cfg.k_i;
        state.integ = std::clamp(state.integ, -cap, cap);
    }
    state.last_error = err;
    state.has_error = true;
    return std::clamp(cfg.k_p * err + cfg.k_i * state.integ, -cfg.u_max, cfg.u_max);
}

double backdrive_guard(double u, const GrowthConfig& cfg)
{
    return u < 0.0 ? -cfg.coulomb_u : u;
}

double flow_limited_speed(const GrowthConfig& cfg)
{
    return cfg.q_max / (std::numbers::pi * cfg.body_radius * cfg.body_radius);
}

double growth_rate(double p_body, double motor_allowance, const GrowthConfig& cfg)
{
    if (p_body < cfg.p_grow) return 0.0;
    const double frac = std::min(1.0, (p_body - cfg.p_grow) / (cfg.p_body_max - cfg.p_grow));
    const double v_pressure = frac * cfg.v_max;
    return std::max(0.0, std::min({v_pressure, flow_limited_speed(cfg), motor_allowance, cfg.v_max}));
}

GrowthState estop(const GrowthState& state)
{
    GrowthState out = state;
    out.p_body = 0.0;
    out.u = 0.0;
    out.integ = 0.0;
    out.omega_d = 0.0;
    out.has_error = false;
    out.last_error = 0.0;
    return out;
}

namespace {

constexpr double kStiction = 1e-9;  // rad/s

// Voltage left after the gearbox friction, which always opposes motion.
double net_drive(double u, double omega, double coulomb)
{
    if (omega < 0.0) return u + coulomb;
    if (omega > 0.0) return u - coulomb;
    if (std::abs(u) <= coulomb) return 0.0;
    return u > 0.0 ? u - coulomb : u + coulomb;
}

}  // namespace

GrowthTick advance_growth(GrowthState& state, const GrowthCommand& cmd, double dt,
                          const GrowthConfig& cfg, bool guard_enabled)
{
    if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
    GrowthTick tick;

    double u_applied = 0.0;
    if (cmd.estopped) {
        state = estop(state);
    } else {
        state.p_body = pot_to_pressure(cmd.r_p, cfg);
        state.omega_d = pot_to_speed(cmd.r_m, cmd.d, cfg);
        const double u = pi_motor(state.omega_d, state.omega, state, dt, cfg);
        u_applied = guard_enabled ? backdrive_guard(u, cfg) : u;
        tick.guard_active = guard_enabled && u < 0.0;
    }
    state.u = u_applied;

    // Spool speed the pressure alone would pull material out at.
    const double pull_speed = growth_rate(state.p_body, cfg.v_max, cfg);
    const double omega_pull = -pull_speed / cfg.spool_radius;

    const double drive = net_drive(u_applied, state.omega, cfg.coulomb_u);
    const double omega_target = cfg.motor_gain * drive + omega_pull;
    const double omega_plant = omega_target + (state.omega - omega_target) * std::exp(-dt / cfg.motor_tau);

    // Unless the motor pushes harder than the friction-cancel voltage in the
    // growth direction, only the body can turn the spool toward unspooling,
    // so the spool cannot outrun the pull.
    const bool motor_unspools = u_applied < -cfg.coulomb_u;
    double omega_new = motor_unspools ? omega_plant : std::max(omega_plant, omega_pull);
    if (std::abs(omega_new) < kStiction) omega_new = 0.0;  // gearbox stiction holds a creeping spool

    const double allowance = std::max(0.0, -omega_plant) * cfg.spool_radius;
    tick.growth_rate = growth_rate(state.p_body, allowance, cfg);
    tick.unspool_rate = std::max(0.0, -omega_new) * cfg.spool_radius;
    tick.retraction_rate = std::max(0.0, omega_new) * cfg.spool_radius;
    tick.tension = tick.unspool_rate <= tick.growth_rate + 1e-9;

    state.omega = omega_new;
    state.tension = tick.tension;
    return tick;
}

}  // namespace vinesim
