#ifndef FAIRSHARE_ALLOCATORS_HPP
#define FAIRSHARE_ALLOCATORS_HPP

#include "fairshare/capacity.hpp"
#include "fairshare/common.hpp"
#include "fairshare/pf_solver.hpp"

#include <memory>

namespace fairshare {

/// Memoized table of the negative log balance function phi(x) = -log psi(x)
/// over the lattice box [0, bound]^R. psi solves the recursion
/// psi(x) = inf{a > 0 : {psi(x - e_r)/a} in C} with psi(0) = 1, which for a
/// polyhedral region closes as a min over links of a log-sum-exp of the
/// predecessor values. Stored in the log domain; psi itself grows
/// combinatorially and would overflow.
class BalanceTable {
public:
    BalanceTable(const CapacityRegion& region, int bound,
                 std::size_t max_entries = std::size_t{1} << 26);

    const CapacityRegion& region() const { return *region_; }
    const Box& box() const { return box_; }
    int bound() const { return box_.bound(); }

    /// phi at a lattice point of the box; +infinity off the nonnegative lattice.
    double phi(const State& x) const;

    /// Balanced fairness rates psi(x - e_r)/psi(x) = exp(phi(x) - phi(x - e_r)).
    Vec rates(const State& x) const;

private:
    const CapacityRegion* region_;
    Box box_;
    std::vector<double> phi_;
};

/// Modified proportional fairness: exp of the unit Legendre-transform
/// decrements, 0 for empty classes. Feasible in C for every lattice point.
Vec pf_prime_rates(const CapacityRegion& region, const State& x);
Vec pf_prime_rates(LegendreCache& cache, const State& x);

Vec bf_rates(const BalanceTable& table, const State& x);

enum class AllocatorKind { kPf, kPfPrime, kBf, kAlphaFair };

/// Uniform allocator handle consumed by the simulator and stationary solvers.
///
/// When phase_owner is nonempty the allocator runs on aggregated per-class
/// populations and splits each class rate across its phases proportionally to
/// phase occupancy (processor sharing within a class).
struct Allocator {
    AllocatorKind kind = AllocatorKind::kPf;
    const CapacityRegion* region = nullptr;
    const BalanceTable* table = nullptr;  // required for kBf
    Vec weights;                          // kAlphaFair
    double alpha = 1.0;                   // kAlphaFair
    std::shared_ptr<LegendreCache> cache; // shared PF' memoization
    std::vector<int> phase_owner;         // expanded class -> base class

    static Allocator pf(const CapacityRegion& region);
    static Allocator pf_prime(const CapacityRegion& region);
    static Allocator bf(const BalanceTable& table);
    static Allocator alpha_fair(const CapacityRegion& region, Vec weights, double alpha);

    /// Splits this allocator across service phases (see phase_owner).
    Allocator with_phases(std::vector<int> owner) const;

    std::string name() const;
    int num_classes() const;

    /// Rate vector at population x; the `allocate` dispatch operation.
    Vec rates(const State& x) const;
};

}  // namespace fairshare

#endif
