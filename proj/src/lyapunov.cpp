#include "fairshare/lyapunov.hpp"

#include "fairshare/pf_solver.hpp"
#include "fairshare/rng.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

LyapunovContext make_lyapunov_context(const CapacityRegion& region, const Vec& rho) {
    if (rho.size() != region.num_classes())
        throw ValidationError("lyapunov: load vector has wrong dimension");
    if (rho.minCoeff() < 0.0) throw ValidationError("lyapunov: loads must be nonnegative");
    return LyapunovContext{region, rho, region.in_interior(rho)};
}

double lyapunov_value(const LyapunovContext& ctx, const Vec& x) {
    if (x.size() != ctx.rho.size())
        throw ValidationError("lyapunov: population vector has wrong dimension");
    double linear = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        if (x[r] == 0.0) continue;
        if (ctx.rho[r] == 0.0) return kPosInf;
        linear += x[r] * std::log(ctx.rho[r]);
    }
    return legendre(ctx.region, x) - linear;
}

NormBounds norm_bounds_certificate(const LyapunovContext& ctx, int samples, std::uint64_t seed) {
    if (!ctx.stable)
        throw ValidationError("norm bounds: loads are not interior, bounds need not exist");
    const int R = ctx.region.num_classes();
    NormBounds bounds{kPosInf, kNegInf};
    auto absorb = [&](const Vec& y) {
        double v = lyapunov_value(ctx, y);
        bounds.lower = std::min(bounds.lower, v);
        bounds.upper = std::max(bounds.upper, v);
    };
    for (int r = 0; r < R; ++r) absorb(Vec::Unit(R, r));
    CounterRng rng(seed, 0x6c79'6170u);
    for (int i = 0; i < samples; ++i) {
        Vec y(R);
        for (int r = 0; r < R; ++r) y[r] = rng.uniform(0.0, 1.0);
        int pinned = static_cast<int>(rng.below(static_cast<std::uint64_t>(R)));
        y[pinned] = 1.0;  // lands on the unit sup-norm sphere
        absorb(y);
    }
    if (!(bounds.lower > 0.0))
        throw NumericalError("norm bounds: sampled lower bound is not positive");
    return bounds;
}

double harmonic_remainder(const State& x) {
    double total = 0.0;
    for (int count : x) {
        if (count < 0) throw ValidationError("harmonic remainder: negative coordinate");
        for (int m = 1; m <= count; ++m) total += 1.0 / m;
    }
    return total;
}

SandwichReport sandwich_report(const CapacityRegion& region, const BalanceTable& table) {
    SandwichReport report{kNegInf, kNegInf};
    const Box& box = table.box();
    for (std::size_t i = 0; i < box.size(); ++i) {
        State x = box.state(i);
        double delta = legendre(region, to_vec(x));
        double phi = table.phi(x);
        report.max_lower_violation = std::max(report.max_lower_violation, delta - phi);
        report.max_upper_violation =
            std::max(report.max_upper_violation, phi - delta - harmonic_remainder(x));
    }
    return report;
}

double quadratic_bound_residual(const CapacityRegion& region, const Vec& x, const Vec& h) {
    if (x.size() != region.num_classes() || h.size() != x.size())
        throw ValidationError("quadratic bound: dimension mismatch");
    if (x.minCoeff() <= 0.0)
        throw ValidationError("quadratic bound: x must be strictly positive");
    if ((x + h).minCoeff() < 0.0)
        throw ValidationError("quadratic bound: x + h must be nonnegative");
    double base = legendre(region, x);
    double shifted = legendre(region, x + h);
    Vec gradient = pf_gradient(region, x);
    double quad = 0.0;
    double inner = 0.0;
    for (Eigen::Index s = 0; s < x.size(); ++s) {
        quad += h[s] * h[s] / x[s];
        if (h[s] != 0.0) inner += h[s] * gradient[s];
    }
    return shifted - base - inner - quad;
}

std::vector<ConvergenceRow> ld_convergence_report(const CapacityRegion& region,
                                                  const State& direction,
                                                  const std::vector<int>& n_list,
                                                  std::size_t max_entries) {
    if (static_cast<int>(direction.size()) != region.num_classes())
        throw ValidationError("convergence report: direction has wrong dimension");
    int max_coord = 0;
    for (int v : direction) {
        if (v < 0) throw ValidationError("convergence report: direction must be nonnegative");
        max_coord = std::max(max_coord, v);
    }
    int max_n = 1;
    for (int n : n_list) max_n = std::max(max_n, n);

    BalanceTable table(region, max_n * std::max(1, max_coord), max_entries);
    Vec dir = to_vec(direction);
    double delta_dir = legendre(region, dir);
    Vec pf_dir = pf_allocate(region, dir).lambda;

    std::vector<ConvergenceRow> rows;
    rows.reserve(n_list.size());
    for (int n : n_list) {
        if (n < 1) throw ValidationError("convergence report: n must be at least 1");
        State scaled(direction.size());
        for (std::size_t r = 0; r < direction.size(); ++r) scaled[r] = n * direction[r];
        ConvergenceRow row;
        row.n = n;
        row.gap = table.phi(scaled) / n - delta_dir;
        row.gap_bound = harmonic_remainder(scaled) / n;
        row.rate_gap = (table.rates(scaled) - pf_dir).cwiseAbs().maxCoeff();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fairshare
