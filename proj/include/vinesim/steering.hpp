#pragma once

// Pressure allocation for the three series pouch motors.
//
// Each actuator i sits at angle psi_i around the body and, inflated to p_i,
// displaces the distal tip by c * p_i toward psi_i. Three actuators drive two
// lateral degrees of freedom; the remaining null direction is spent keeping at
// least one actuator vented.

#include "vinesim/kinematics.hpp"

#include <array>

namespace vinesim {

struct ActuatorLayout {
    std::array<double, 3> psi{};  ///< placement angles, rad, CCW from +x
    double c = 0.01;              ///< m/kPa
    double p_max = 14.0;          ///< kPa

    /// psi = (90, 210, 330) degrees.
    static ActuatorLayout equally_spaced(double c = 0.01, double p_max = 14.0);

    /// Throws ConfigError unless c, p_max > 0 and the actuators positively
    /// span the plane (every tip reachable with non-negative pressures).
    void validate() const;

    /// Null-space direction (n1, n2, 1) of the superposition map.
    std::array<double, 3> null_direction() const;
};

struct PressureCommand {
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;

    double min() const;
    double max() const;
    std::array<double, 3> as_array() const { return {p1, p2, p3}; }
};

struct SolverOptions {
    double null_tolerance = 1e-6;       ///< kPa, how close to zero the smallest pressure must be
    double bisection_tolerance = 1e-9;  ///< kPa, on p3
    int max_iterations = 200;
};

struct PressureSolution {
    PressureCommand pressures;
    bool saturated = false;   ///< target was scaled radially onto the reachable boundary
    int iterations = 0;
};

struct SaturatedCommand {
    PressureCommand pressures;
    bool clamped = false;
};

TipPosition superpose_tip(const PressureCommand& p, const ActuatorLayout& layout);

/// Non-negative pressures reproducing `tip` with the smallest pressure at zero.
/// Targets that would exceed p_max are scaled toward the origin until the
/// largest pressure equals p_max, and the result is flagged saturated.
PressureSolution solve_pressures(const TipPosition& tip, const ActuatorLayout& layout,
                                 const SolverOptions& opts = {});

/// Per-component clamp to [0, p_max].
SaturatedCommand saturate(const PressureCommand& p, const ActuatorLayout& layout);

}  // namespace vinesim
