#include "fairshare/allocators.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

BalanceTable::BalanceTable(const CapacityRegion& region, int bound, std::size_t max_entries)
    : region_(&region), box_(region.num_classes(), bound) {
    if (bound < 1) throw ValidationError("balance table: bound must be at least 1");
    if (box_.size() > max_entries)
        throw ResourceError("balance table: box of " + std::to_string(box_.size()) +
                            " states exceeds the budget of " + std::to_string(max_entries));

    const Mat& A = region.usage();
    const Vec& c = region.capacity();
    const int R = region.num_classes();
    const int L = region.num_links();
    phi_.assign(box_.size(), 0.0);

    std::vector<double> terms;
    for_each_level_ordered(box_, [&](std::size_t idx, const State& x) {
        bool origin = std::all_of(x.begin(), x.end(), [](int v) { return v == 0; });
        if (origin) {
            phi_[idx] = 0.0;
            return;
        }
        double best = kPosInf;
        State prev = x;
        for (int l = 0; l < L; ++l) {
            terms.clear();
            for (int r = 0; r < R; ++r) {
                if (x[static_cast<std::size_t>(r)] == 0 || A(l, r) <= 0.0) continue;
                prev[static_cast<std::size_t>(r)] -= 1;
                terms.push_back(std::log(A(l, r)) - phi_[box_.index(prev)]);
                prev[static_cast<std::size_t>(r)] += 1;
            }
            if (terms.empty()) continue;  // link constrains no occupied class
            best = std::min(best, std::log(c[l]) - log_sum_exp(terms));
        }
        phi_[idx] = best;
    });
}

double BalanceTable::phi(const State& x) const {
    if (static_cast<int>(x.size()) != box_.dims())
        throw ValidationError("balance table: state has wrong dimension");
    for (int v : x)
        if (v < 0) return kPosInf;
    if (!box_.contains(x)) throw ValidationError("balance table: state outside the table box");
    return phi_[box_.index(x)];
}

Vec BalanceTable::rates(const State& x) const {
    if (!box_.contains(x)) throw ValidationError("balance table: state outside the table box");
    const int R = box_.dims();
    Vec lambda = Vec::Zero(R);
    double phi_x = phi_[box_.index(x)];
    State prev = x;
    for (int r = 0; r < R; ++r) {
        if (x[static_cast<std::size_t>(r)] == 0) continue;
        prev[static_cast<std::size_t>(r)] -= 1;
        lambda[r] = std::exp(phi_x - phi_[box_.index(prev)]);
        prev[static_cast<std::size_t>(r)] += 1;
    }
    return lambda;
}

Vec bf_rates(const BalanceTable& table, const State& x) { return table.rates(x); }

Vec pf_prime_rates(LegendreCache& cache, const State& x) {
    const int R = cache.region().num_classes();
    if (static_cast<int>(x.size()) != R)
        throw ValidationError("pf_prime: state has wrong dimension");
    Vec lambda = Vec::Zero(R);
    double here = cache.value(x);
    State prev = x;
    for (int r = 0; r < R; ++r) {
        if (x[static_cast<std::size_t>(r)] <= 0) continue;
        prev[static_cast<std::size_t>(r)] -= 1;
        lambda[r] = std::exp(here - cache.value(prev));
        prev[static_cast<std::size_t>(r)] += 1;
    }
    return lambda;
}

Vec pf_prime_rates(const CapacityRegion& region, const State& x) {
    LegendreCache cache(region);
    return pf_prime_rates(cache, x);
}

Allocator Allocator::pf(const CapacityRegion& region) {
    Allocator a;
    a.kind = AllocatorKind::kPf;
    a.region = &region;
    return a;
}

Allocator Allocator::pf_prime(const CapacityRegion& region) {
    Allocator a;
    a.kind = AllocatorKind::kPfPrime;
    a.region = &region;
    a.cache = std::make_shared<LegendreCache>(region);
    return a;
}

Allocator Allocator::bf(const BalanceTable& table) {
    Allocator a;
    a.kind = AllocatorKind::kBf;
    a.region = &table.region();
    a.table = &table;
    return a;
}

Allocator Allocator::alpha_fair(const CapacityRegion& region, Vec weights, double alpha) {
    Allocator a;
    a.kind = AllocatorKind::kAlphaFair;
    a.region = &region;
    a.weights = std::move(weights);
    a.alpha = alpha;
    return a;
}

Allocator Allocator::with_phases(std::vector<int> owner) const {
    Allocator a = *this;
    a.phase_owner = std::move(owner);
    return a;
}

std::string Allocator::name() const {
    switch (kind) {
        case AllocatorKind::kPf: return "pf";
        case AllocatorKind::kPfPrime: return "pf_prime";
        case AllocatorKind::kBf: return "bf";
        case AllocatorKind::kAlphaFair: return "alpha_fair";
    }
    return "?";
}

int Allocator::num_classes() const {
    if (!phase_owner.empty()) return static_cast<int>(phase_owner.size());
    return region->num_classes();
}

Vec Allocator::rates(const State& x) const {
    if (!phase_owner.empty()) {
        // Aggregate phases per class, allocate on class totals, split back
        // proportionally to phase occupancy.
        State base(static_cast<std::size_t>(region->num_classes()), 0);
        for (std::size_t i = 0; i < phase_owner.size(); ++i)
            base[static_cast<std::size_t>(phase_owner[i])] += x[i];
        Allocator flat = *this;
        flat.phase_owner.clear();
        Vec class_rates = flat.rates(base);
        Vec out = Vec::Zero(static_cast<Eigen::Index>(phase_owner.size()));
        for (std::size_t i = 0; i < phase_owner.size(); ++i) {
            int owner = phase_owner[i];
            int total = base[static_cast<std::size_t>(owner)];
            if (total > 0 && x[i] > 0)
                out[static_cast<Eigen::Index>(i)] =
                    class_rates[owner] * static_cast<double>(x[i]) / static_cast<double>(total);
        }
        return out;
    }

    switch (kind) {
        case AllocatorKind::kPf:
            return pf_allocate(*region, to_vec(x)).lambda;
        case AllocatorKind::kPfPrime:
            return cache ? pf_prime_rates(*cache, x) : pf_prime_rates(*region, x);
        case AllocatorKind::kBf:
            if (table == nullptr) throw ValidationError("allocator: bf requires a balance table");
            return table->rates(x);
        case AllocatorKind::kAlphaFair:
            return alpha_fair_allocate(*region, to_vec(x), weights, alpha).lambda;
    }
    throw ValidationError("allocator: unknown kind");
}

}  // namespace fairshare
