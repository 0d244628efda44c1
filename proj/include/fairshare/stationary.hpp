#ifndef FAIRSHARE_STATIONARY_HPP
#define FAIRSHARE_STATIONARY_HPP

#include "fairshare/allocators.hpp"
#include "fairshare/common.hpp"
#include "fairshare/lyapunov.hpp"
#include "fairshare/traffic.hpp"

namespace fairshare {

/// Probability mass over a lattice box, normalized in the log domain. The
/// pre-normalization log weights and the log normalization constant are kept;
/// leakage (mass observed outside the box, for empirical distributions) is
/// reported relative to the total before normalization.
struct StateDistribution {
    Box box;
    std::vector<double> mass;
    std::vector<double> log_weight;
    double log_norm = 0.0;
    double leakage = 0.0;

    double at(const State& x) const { return mass[box.index(x)]; }
};

/// Normalizes log weights over a box into a StateDistribution.
StateDistribution normalize_log_weights(Box box, std::vector<double> log_weight);

/// Stationary law of the reversible modified-proportional-fairness chain on
/// the box: mass(x) proportional to exp(-L(x)). Computable for any loads; a
/// non-interior context only loses the normalizability interpretation.
StateDistribution pf_prime_stationary(const LyapunovContext& ctx, int bound);

/// Same, drawing Legendre values from a shared cache (the cache region must
/// be the context region).
StateDistribution pf_prime_stationary(const LyapunovContext& ctx, int bound, LegendreCache& cache);

/// Balanced fairness stationary law: mass(x) proportional to
/// exp(-phi(x) + sum_r x_r log rho_r).
StateDistribution bf_stationary(const BalanceTable& table, const LyapunovContext& ctx, int bound);

/// Max relative residual of the one-step balance relation
/// pi(x + e_r) mu_r lambda_r(x + e_r) = pi(x) nu_r over interior box edges.
/// The relation characterizes reversibility of the non-routing chain, so the
/// model must have P = 0.
double detailed_balance_residual(const StateDistribution& dist, const Allocator& allocator,
                                 const TrafficModel& model);

/// Stationary vector of the generator restricted to the box with outbound
/// transitions suppressed. Dense solve below 2^12 states, power iteration on
/// the uniformized kernel up to the 2^16 budget. An oracle for comparing
/// closed-form laws against arbitrary allocators.
StateDistribution truncated_exact(const Allocator& allocator, const TrafficModel& model, int bound);

double total_variation(const StateDistribution& a, const StateDistribution& b);

}  // namespace fairshare

#endif
