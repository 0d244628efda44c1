#ifndef FAIRSHARE_LYAPUNOV_HPP
#define FAIRSHARE_LYAPUNOV_HPP

#include "fairshare/allocators.hpp"
#include "fairshare/capacity.hpp"
#include "fairshare/common.hpp"

#include <cstdint>

namespace fairshare {

/// Load vector paired with the capacity region it is measured against. The
/// stability flag records whether the loads lie in the region interior; it is
/// never assumed.
struct LyapunovContext {
    CapacityRegion region;
    Vec rho;
    bool stable;
};

LyapunovContext make_lyapunov_context(const CapacityRegion& region, const Vec& rho);

/// L(x) = legendre(x) - sum_r x_r log(rho_r). Zero at the origin, positively
/// homogeneous; +infinity when some x_r > 0 has rho_r = 0.
double lyapunov_value(const LyapunovContext& ctx, const Vec& x);

struct NormBounds {
    double lower = 0.0;  // min of L over sampled unit sup-norm directions
    double upper = 0.0;  // max over the same directions
};

/// Sampled norm-equivalence certificate: extremes of L over `samples` random
/// directions on the unit sup-norm sphere of the nonnegative orthant plus all
/// unit vectors. Deterministic in the seed; requires a stable context.
NormBounds norm_bounds_certificate(const LyapunovContext& ctx, int samples, std::uint64_t seed);

/// Sum of harmonic numbers of the coordinates: sum_r sum_{m=1}^{x_r} 1/m.
double harmonic_remainder(const State& x);

struct SandwichReport {
    double max_lower_violation = 0.0;  // max over the box of legendre - phi
    double max_upper_violation = 0.0;  // max over the box of phi - legendre - remainder
};

/// Worst-case violations of legendre(x) <= phi(x) <= legendre(x) + remainder(x)
/// over the full table box.
SandwichReport sandwich_report(const CapacityRegion& region, const BalanceTable& table);

/// legendre(x+h) - legendre(x) - <h, gradient(x)> - sum_s h_s^2/x_s, which is
/// nonpositive up to solver tolerance for strictly positive x with x + h >= 0.
double quadratic_bound_residual(const CapacityRegion& region, const Vec& x, const Vec& h);

struct ConvergenceRow {
    int n = 0;
    double gap = 0.0;        // phi(n x)/n - legendre(x)
    double gap_bound = 0.0;  // harmonic_remainder(n x)/n
    double rate_gap = 0.0;   // sup-norm distance between BF rates at n x and PF rates at x
};

/// Scaling diagnostics along the ray n * direction: the normalized gap between
/// the balance function and the Legendre transform (contained in
/// [0, gap_bound]), and the distance of balanced fairness rates from the
/// proportionally fair limit.
std::vector<ConvergenceRow> ld_convergence_report(const CapacityRegion& region,
                                                  const State& direction,
                                                  const std::vector<int>& n_list,
                                                  std::size_t max_entries = std::size_t{1} << 26);

}  // namespace fairshare

#endif
