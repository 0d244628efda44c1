#ifndef FAIRSHARE_FLUID_HPP
#define FAIRSHARE_FLUID_HPP

#include "fairshare/capacity.hpp"
#include "fairshare/common.hpp"
#include "fairshare/lyapunov.hpp"
#include "fairshare/traffic.hpp"

namespace fairshare {

/// Drift of the fluid dynamics at a state. Classes sitting at zero whose
/// balance can be held with feasible service are pinned (zero drift); the
/// remaining classes evolve with excursion-removed arrival and routing rates
/// and proportionally fair service on the face restriction.
struct FluidDrift {
    Vec xdot;
    std::vector<int> face;  // pinned classes, ascending
    double h_bound = 0.0;   // inner product of log(lambda/rho) with the drift
    Vec applied_rates;      // service rate per class entering the bookkeeping
};

FluidDrift fluid_drift(const CapacityRegion& region, const TrafficModel& model, const Vec& x);

/// Fluid trajectory on a uniform grid. cumulative_service tracks the
/// integrals D_r of applied service rates, so the flow balance
/// x(t) = x(0) + nu_bar t - mu D(t) + P^T mu D(t) holds on the grid up to
/// integration error.
struct FluidTrajectory {
    double h_step = 0.0;
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<std::uint32_t> faces;  // bitmask of pinned classes
    std::vector<Vec> drifts;
    std::vector<double> h_bounds;
    std::vector<Vec> cumulative_service;
};

/// Explicit Euler with nonnegativity handling: steps that would cross zero
/// are refined by halving (up to 20 levels) and finally landed exactly on the
/// boundary with the service integrals adjusted to keep the flow balance
/// exact.
FluidTrajectory integrate(const CapacityRegion& region, const TrafficModel& model, const Vec& x0,
                          double t_end, double h_step);

struct DescentReport {
    bool monotone = false;
    double t_half = kPosInf;     // first grid time with L <= L(x0)/2
    double initial_value = 0.0;
    double final_value = 0.0;
    double tolerance = 0.0;
};

/// Evaluates the Lyapunov function along the trajectory; monotone means
/// nonincreasing within an integrator-scale tolerance.
DescentReport descent_report(const FluidTrajectory& trajectory, const LyapunovContext& ctx);

}  // namespace fairshare

#endif
