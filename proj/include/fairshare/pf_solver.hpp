#ifndef FAIRSHARE_PF_SOLVER_HPP
#define FAIRSHARE_PF_SOLVER_HPP

#include "fairshare/capacity.hpp"
#include "fairshare/common.hpp"

#include <memory>
#include <unordered_map>

namespace fairshare {

/// Certified solution of a fairness optimization over a capacity region.
///
/// gamma_r = log(lambda_r) for supported classes; classes with x_r = 0 carry
/// lambda_r = 0 and the -infinity sentinel in gamma (exp of the sentinel is
/// exactly 0). objective is the log objective sum_{x_r > 0} x_r log(lambda_r),
/// which at a proportionally fair optimum equals the Legendre transform value.
struct AllocationResult {
    Vec lambda;
    Vec gamma;
    Vec prices;
    double kkt_residual = 0.0;
    double objective = 0.0;
};

/// Maximizer of sum_r x_r U_r(lambda_r / x_r) over the region, where U_r is the
/// weighted alpha-fair utility (w_r log y at alpha = 1, w_r y^{1-alpha}/(1-alpha)
/// otherwise). Classes with x_r = 0 receive rate 0. The result carries a KKT
/// certificate accurate to kKktTol; failure to certify raises NumericalError.
AllocationResult alpha_fair_allocate(const CapacityRegion& region, const Vec& x,
                                     const Vec& w, double alpha);

/// Proportionally fair allocation: alpha_fair_allocate with unit weights, alpha = 1.
AllocationResult pf_allocate(const CapacityRegion& region, const Vec& x);

/// Legendre transform of the log-image indicator: the optimal value
/// sum_{x_r > 0} x_r log(lambda_r^PF). Zero at x = 0; positively homogeneous.
double legendre(const CapacityRegion& region, const Vec& x);

/// Gradient of the Legendre transform at strictly positive x: the vector of
/// log PF rates. Rejects vectors with zero coordinates, where only a
/// subgradient exists.
Vec pf_gradient(const CapacityRegion& region, const Vec& x);

/// Memoizing wrapper for Legendre transform values at lattice points. Reusing
/// cached values makes telescoping identities cancel exactly in floating point.
class LegendreCache {
public:
    explicit LegendreCache(const CapacityRegion& region) : region_(&region) {}

    double value(const State& x);
    const CapacityRegion& region() const { return *region_; }

private:
    struct StateHash {
        std::size_t operator()(const State& s) const {
            std::size_t h = 0x9e3779b97f4a7c15ull;
            for (int v : s) h = (h ^ static_cast<std::size_t>(v)) * 0xbf58476d1ce4e5b9ull;
            return h;
        }
    };

    const CapacityRegion* region_;
    std::unordered_map<State, double, StateHash> values_;
};

}  // namespace fairshare

#endif
