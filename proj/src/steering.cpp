#include "vinesim/steering.hpp"

#include "vinesim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vinesim {

namespace {

// p1 and p2 as affine functions of p3 for a given tip.
struct Affine {
    double slope1, offset1, slope2, offset2;

    double p1(double p3) const { return slope1 * p3 + offset1; }
    double p2(double p3) const { return slope2 * p3 + offset2; }
    bool feasible(double p3) const { return p1(p3) >= 0.0 && p2(p3) >= 0.0; }
};

Affine affine_solution(const TipPosition& tip, const ActuatorLayout& l)
{
    const auto& psi = l.psi;
    const double s21 = std::sin(psi[1] - psi[0]);
    const double s12 = std::sin(psi[0] - psi[1]);
    return {
        std::sin(psi[2] - psi[1]) / s21,
        (tip.x * std::sin(psi[1]) - tip.y * std::cos(psi[1])) / (l.c * s21),
        std::sin(psi[2] - psi[0]) / s12,
        (tip.x * std::sin(psi[0]) - tip.y * std::cos(psi[0])) / (l.c * s12),
    };
}

double zero_if_tiny(double v) { return (v < 0.0 && v > -1e-12) ? 0.0 : v; }

}  // namespace

ActuatorLayout ActuatorLayout::equally_spaced(double c, double p_max)
{
    constexpr double deg = std::numbers::pi / 180.0;
    return {{90.0 * deg, 210.0 * deg, 330.0 * deg}, c, p_max};
}

void ActuatorLayout::validate() const
{
    if (!(c > 0.0)) throw ConfigError("actuator gain c must be positive");
    if (!(p_max > 0.0)) throw ConfigError("p_max must be positive");
    for (double a : psi)
        if (!std::isfinite(a)) throw ConfigError("actuator angle is not finite");
    if (std::abs(std::sin(psi[1] - psi[0])) < 1e-9)
        throw ConfigError("actuators 1 and 2 are collinear");
    const auto n = null_direction();
    if (!(n[0] > 1e-9 && n[1] > 1e-9))
        throw ConfigError("actuators do not positively span the steering plane");
}

std::array<double, 3> ActuatorLayout::null_direction() const
{
    return {std::sin(psi[2] - psi[1]) / std::sin(psi[1] - psi[0]),
            std::sin(psi[2] - psi[0]) / std::sin(psi[0] - psi[1]), 1.0};
}

double PressureCommand::min() const { return std::min({p1, p2, p3}); }
double PressureCommand::max() const { return std::max({p1, p2, p3}); }

TipPosition superpose_tip(const PressureCommand& p, const ActuatorLayout& l)
{
    const auto& psi = l.psi;
    return {l.c * (p.p1 * std::cos(psi[0]) + p.p2 * std::cos(psi[1]) + p.p3 * std::cos(psi[2])),
            l.c * (p.p1 * std::sin(psi[0]) + p.p2 * std::sin(psi[1]) + p.p3 * std::sin(psi[2]))};
}

PressureSolution solve_pressures(const TipPosition& tip, const ActuatorLayout& layout,
                                 const SolverOptions& opts)
{
    if (!std::isfinite(tip.x) || !std::isfinite(tip.y)) throw InvalidInput("tip is not finite");
    layout.validate();

    const Affine a = affine_solution(tip, layout);
    PressureSolution out;

    // Start from p3 = 0. Feasibility is monotone in p3 because both slopes are
    // positive, so grow the guess until feasible and then bisect back down.
    double p3 = 0.0;
    if (!a.feasible(p3)) {
        double lo = 0.0;
        double hi = 1.0;
        while (!a.feasible(hi) && out.iterations < opts.max_iterations) {
            lo = hi;
            hi *= 2.0;
            ++out.iterations;
        }
        auto settled = [&] {
            return hi - lo <= opts.bisection_tolerance &&
                   std::min(a.p1(hi), a.p2(hi)) <= opts.null_tolerance;
        };
        while (!settled() && out.iterations < opts.max_iterations) {
            const double mid = 0.5 * (lo + hi);
            (a.feasible(mid) ? hi : lo) = mid;
            ++out.iterations;
        }
        p3 = hi;
    }
    out.pressures = {zero_if_tiny(a.p1(p3)), zero_if_tiny(a.p2(p3)), p3};

    const double peak = out.pressures.max();
    if (peak > layout.p_max) {
        // The minimal solution is positively homogeneous in the tip, so a
        // uniform scale keeps the commanded direction.
        const double k = layout.p_max / peak;
        out.pressures = {out.pressures.p1 * k, out.pressures.p2 * k, out.pressures.p3 * k};
        out.saturated = true;
    }
    return out;
}

SaturatedCommand saturate(const PressureCommand& p, const ActuatorLayout& layout)
{
    SaturatedCommand out{p, false};
    for (double* v : {&out.pressures.p1, &out.pressures.p2, &out.pressures.p3}) {
        const double c = std::clamp(*v, 0.0, layout.p_max);
        if (c != *v || std::isnan(*v)) out.clamped = true;
        *v = std::isnan(*v) ? 0.0 : c;
    }
    return out;
}

}  // namespace vinesim
