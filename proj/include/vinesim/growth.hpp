#pragma once

// Growth control: pressure and speed potentiometers, the spool motor PI loop,
// the anti-slack backdrive guard and the growth-rate model.
//
// Sign convention for the spool: negative speed and voltage unspool material
// (growth), positive reel it back in (retraction).

#include <cstdint>

namespace vinesim {

enum class Direction : int { Growth = -1, Retraction = 1 };

struct GrowthConfig {
    double adc_max = 1023.0;         ///< counts, pot range upper bound
    double c_p = 14.0 / 1023.0;      ///< kPa/count
    double r_p0 = 0.0;               ///< counts
    double c_m = (10.0 / 3.0) / 1023.0;  ///< (rad/s)/count
    double r_m0 = 0.0;               ///< counts
    double k_p = 0.5;                ///< V*s/rad
    double k_i = 4.0;                ///< V/rad
    double p_grow = 3.0;             ///< kPa, below this the body does not evert
    double p_body_max = 14.0;        ///< kPa
    double q_max = 470.0;            ///< cm^3/s, compressor flow
    double body_radius = 2.5;        ///< cm
    double v_max = 10.0;             ///< cm/s
    double coulomb_u = 0.3;          ///< V, cancels gearbox Coulomb friction
    double spool_radius = 3.0;       ///< cm
    double u_max = 12.0;             ///< V, motor supply; also bounds the integral term
    double motor_gain = 2.0;         ///< (rad/s)/V, steady-state unloaded speed per volt
    double motor_tau = 0.05;         ///< s, spool speed time constant

    /// Throws ConfigError on non-positive gains/limits or p_grow >= p_body_max.
    void validate() const;
};

struct GrowthState {
    double p_body = 0.0;   ///< kPa
    double omega = 0.0;    ///< rad/s, measured spool speed
    double omega_d = 0.0;  ///< rad/s
    double u = 0.0;        ///< V, voltage applied after the guard
    double integ = 0.0;    ///< rad, integral of speed error
    double last_error = 0.0;
    bool has_error = false;
    double length = 0.0;   ///< m, deployed
    bool tension = true;
};

double pot_to_pressure(double r_p, const GrowthConfig& cfg);
double pot_to_speed(double r_m, Direction d, const GrowthConfig& cfg);

/// PI on spool speed with trapezoidal integration and integral clamping.
/// Updates the integral and error history in `state`; returns the voltage.
double pi_motor(double omega_d, double omega, GrowthState& state, double dt, const GrowthConfig& cfg);

/// Replaces any growth-direction voltage with the friction-cancel voltage.
double backdrive_guard(double u, const GrowthConfig& cfg);

/// Ceiling imposed by compressor flow filling the body cross-section, cm/s.
double flow_limited_speed(const GrowthConfig& cfg);

/// Body growth speed, cm/s, for a body pressure and a motor unspool allowance.
double growth_rate(double p_body, double motor_allowance, const GrowthConfig& cfg);

GrowthState estop(const GrowthState& state);

/// One control tick of the growth subsystem.
struct GrowthCommand {
    double r_p = 0.0;
    double r_m = 0.0;
    Direction d = Direction::Growth;
    bool estopped = false;
};

struct GrowthTick {
    double growth_rate = 0.0;      ///< cm/s, body eversion speed (>= 0)
    double retraction_rate = 0.0;  ///< cm/s, material reeled in (>= 0)
    double unspool_rate = 0.0;     ///< cm/s, spool surface speed in the growth direction
    bool guard_active = false;
    bool tension = true;

    double signed_rate() const { return growth_rate - retraction_rate; }
};

/// Advances pressure, PI loop, guard and spool model by dt. `guard_enabled`
/// exists so tests can show what happens without the anti-slack rule.
GrowthTick advance_growth(GrowthState& state, const GrowthCommand& cmd, double dt,
                          const GrowthConfig& cfg, bool guard_enabled = true);

}  // namespace vinesim
