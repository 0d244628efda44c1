#include "fairshare/verify.hpp"

#include "fairshare/dynamics.hpp"
#include "fairshare/fluid.hpp"
#include "fairshare/lyapunov.hpp"
#include "fairshare/pf_solver.hpp"
#include "fairshare/rng.hpp"
#include "fairshare/stationary.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

namespace fairshare {

namespace {

// ---------------------------------------------------------------------------
// Built-in scenario constructors

Scenario make_scenario(std::string name, Mat A, Vec c, Vec nu_bar, Vec mu, Mat P,
                       std::optional<PhaseTypeSpec> phases = std::nullopt) {
    return Scenario{std::move(name),
                    CapacityRegion(std::move(A), std::move(c)),
                    TrafficModel(std::move(nu_bar), std::move(mu), std::move(P)),
                    std::move(phases),
                    AllocatorSpec{},
                    RunConfig{}};
}

Scenario single_link() {
    Mat A(1, 1);
    A << 1.0;
    return make_scenario("single_link", A, Vec::Ones(1), 0.5 * Vec::Ones(1), Vec::Ones(1),
                         Mat::Zero(1, 1));
}

Scenario single_link_two_class() {
    Mat A(1, 2);
    A << 1.0, 1.0;
    Vec nu_bar(2);
    nu_bar << 0.3, 0.3;
    return make_scenario("single_link_two_class", A, Vec::Ones(1), nu_bar, Vec::Ones(2),
                         Mat::Zero(2, 2));
}

Scenario two_link_three_class() {
    Mat A(2, 3);
    A << 1.0, 0.0, 1.0,
         0.0, 1.0, 1.0;
    Vec nu_bar(3);
    nu_bar << 0.4, 0.4, 0.4;
    return make_scenario("two_link_three_class", A, Vec::Ones(2), nu_bar, Vec::Ones(3),
                         Mat::Zero(3, 3));
}

Scenario line_network() {
    Mat A(3, 4);
    A << 1.0, 0.0, 0.0, 1.0,
         0.0, 1.0, 0.0, 1.0,
         0.0, 0.0, 1.0, 1.0;
    Vec nu_bar(4);
    nu_bar << 0.3, 0.3, 0.3, 0.2;
    return make_scenario("line_network", A, Vec::Ones(3), nu_bar, Vec::Ones(4), Mat::Zero(4, 4));
}

CapacityRegion random_region(CounterRng& rng, int num_classes, int num_links) {
    Mat A = Mat::Zero(num_links, num_classes);
    for (int l = 0; l < num_links; ++l)
        for (int r = 0; r < num_classes; ++r)
            if (rng.uniform01() < 0.55) A(l, r) = rng.uniform(0.3, 1.3);
    for (int l = 0; l < num_links; ++l)
        if (A.row(l).maxCoeff() <= 0.0)
            A(l, static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)))) =
                rng.uniform(0.3, 1.3);
    for (int r = 0; r < num_classes; ++r)
        if (A.col(r).maxCoeff() <= 0.0)
            A(static_cast<int>(rng.below(static_cast<std::uint64_t>(num_links))), r) =
                rng.uniform(0.3, 1.3);
    Vec c(num_links);
    for (int l = 0; l < num_links; ++l) c[l] = rng.uniform(0.8, 2.0);
    return CapacityRegion(std::move(A), std::move(c));
}

// Loads strictly inside the region, scaled to 60% of the tightest link.
Vec random_interior_loads(CounterRng& rng, const CapacityRegion& region) {
    Vec rho(region.num_classes());
    for (int r = 0; r < region.num_classes(); ++r) rho[r] = rng.uniform(0.2, 1.0);
    double worst = 0.0;
    Vec used = region.usage() * rho;
    for (int l = 0; l < region.num_links(); ++l)
        worst = std::max(worst, used[l] / region.capacity()[l]);
    return rho * (0.6 / worst);
}

Scenario random_scenario(std::uint64_t seed, int index) {
    CounterRng rng(seed, 0xd000 + static_cast<std::uint64_t>(index));
    CapacityRegion region = random_region(rng, 4, 3);
    Vec rho = random_interior_loads(rng, region);
    Mat A = region.usage();
    Vec c = region.capacity();
    return make_scenario("random_region_" + std::to_string(index), std::move(A), std::move(c),
                         rho, Vec::Ones(4), Mat::Zero(4, 4));
}

Scenario tandem() {
    Mat A(2, 2);
    A << 1.0, 0.0,
         0.0, 1.0;
    Mat P = Mat::Zero(2, 2);
    P(0, 1) = 1.0;
    Vec nu_bar(2);
    nu_bar << 0.4, 0.0;
    return make_scenario("tandem", A, Vec::Ones(2), nu_bar, Vec::Ones(2), P);
}

Scenario shared_link_routing() {
    Mat A(1, 2);
    A << 1.0, 1.0;
    Mat P = Mat::Zero(2, 2);
    P(0, 1) = 0.5;
    Vec nu_bar(2);
    nu_bar << 0.4, 0.0;
    return make_scenario("shared_link_routing", A, Vec::Ones(1), nu_bar, Vec::Ones(2), P);
}

PhaseTypeSpec erlang2_spec(int num_classes, double phase_rate) {
    PhaseTypeSpec spec;
    for (int r = 0; r < num_classes; ++r) {
        PhaseTypeSpec::ClassPhases cp;
        cp.alpha = Vec::Zero(2);
        cp.alpha[0] = 1.0;
        cp.rates = Vec::Constant(2, phase_rate);
        cp.routing = Mat::Zero(2, 2);
        cp.routing(0, 1) = 1.0;
        spec.classes.push_back(std::move(cp));
    }
    return spec;
}

PhaseTypeSpec hyper_spec(int num_classes) {
    PhaseTypeSpec spec;
    for (int r = 0; r < num_classes; ++r) {
        PhaseTypeSpec::ClassPhases cp;
        cp.alpha = Vec::Constant(2, 0.5);
        cp.rates = Vec(2);
        cp.rates << 1.0, 2.0;
        cp.routing = Mat::Zero(2, 2);
        spec.classes.push_back(std::move(cp));
    }
    return spec;
}

Scenario single_link_two_class_erlang2() {
    Scenario s = single_link_two_class();
    s.name = "single_link_two_class_erlang2";
    s.phase_type = erlang2_spec(2, 2.0);  // mean service 1, loads unchanged
    return s;
}

Scenario single_link_two_class_hyper() {
    Mat A(1, 2);
    A << 1.0, 1.0;
    Vec nu_bar(2);
    nu_bar << 0.4, 0.4;  // mean service 0.75 keeps the loads at 0.3
    Scenario s = make_scenario("single_link_two_class_hyper", A, Vec::Ones(1), nu_bar,
                               Vec::Ones(2), Mat::Zero(2, 2));
    s.phase_type = hyper_spec(2);
    return s;
}

// ---------------------------------------------------------------------------
// Oracles and small numeric helpers

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double grid_objective(const CapacityRegion& region, const Vec& x, const Vec& lambda) {
    if (!region.contains(lambda)) return kNegInf;
    double v = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        if (x[r] <= 0.0) continue;
        if (lambda[r] <= 0.0) return kNegInf;
        v += x[r] * std::log(lambda[r]);
    }
    return v;
}

void grid_recurse(const CapacityRegion& region, const Vec& x, const Vec& lo, const Vec& hi,
                  double step, Eigen::Index dim, Vec& cursor, Vec& best, double& best_value) {
    if (dim == x.size()) {
        double v = grid_objective(region, x, cursor);
        if (v > best_value) {
            best_value = v;
            best = cursor;
        }
        return;
    }
    for (double v = lo[dim]; v <= hi[dim] + 0.5 * step; v += step) {
        cursor[dim] = v;
        grid_recurse(region, x, lo, hi, step, dim + 1, cursor, best, best_value);
    }
}

// Exhaustive grid maximization of the log objective, coarse pass over the
// whole box then a fine pass around the coarse argmax. Independent of the
// KKT solver path.
Vec grid_search_pf(const CapacityRegion& region, const Vec& x, double coarse, double fine) {
    const Eigen::Index R = x.size();
    Vec lo = Vec::Zero(R), hi(R);
    for (Eigen::Index r = 0; r < R; ++r) hi[r] = region.max_class_rate(static_cast<int>(r));
    Vec cursor(R), best = Vec::Zero(R);
    double best_value = kNegInf;
    grid_recurse(region, x, lo, hi, coarse, 0, cursor, best, best_value);
    Vec lo2(R), hi2(R);
    for (Eigen::Index r = 0; r < R; ++r) {
        lo2[r] = std::max(0.0, best[r] - 1.5 * coarse);
        hi2[r] = std::min(hi[r], best[r] + 1.5 * coarse);
    }
    best_value = kNegInf;
    grid_recurse(region, x, lo2, hi2, fine, 0, cursor, best, best_value);
    return best;
}

struct LineFit {
    double slope = 0.0;
    double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& t, const std::vector<double>& y) {
    const double n = static_cast<double>(t.size());
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
        syy += y[i] * y[i];
    }
    LineFit fit;
    double denom = n * stt - st * st;
    fit.slope = (n * sty - st * sy) / denom;
    double ss_tot = syy - sy * sy / n;
    double intercept = (sy - fit.slope * st) / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double e = y[i] - (intercept + fit.slope * t[i]);
        ss_res += e * e;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

Mat random_substochastic(CounterRng& rng, int n, double max_row_sum) {
    Mat P = Mat::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        double sum = 0.0;
        for (int s = 0; s < n; ++s)
            if (rng.uniform01() < 0.6) {
                P(r, s) = rng.uniform(0.05, 1.0);
                sum += P(r, s);
            }
        if (sum > 0.0) {
            double target = rng.uniform(0.2, max_row_sum);
            P.row(r) *= target / sum;
        }
    }
    return P;
}

TrafficModel random_model(CounterRng& rng, int n) {
    Vec nu_bar(n), mu(n);
    for (int r = 0; r < n; ++r) {
        nu_bar[r] = rng.uniform(0.1, 1.0);
        mu[r] = rng.uniform(0.5, 2.0);
    }
    return TrafficModel(std::move(nu_bar), std::move(mu), random_substochastic(rng, n, 0.9));
}

std::string describe(double v) { return format_double(v, 6); }

// ---------------------------------------------------------------------------
// Acceptance criteria

CheckResult criterion_pf_closed_form() {
    CheckResult res;
    res.id = "acceptance.01_pf_closed_form";
    Scenario s = two_link_three_class();
    Vec x(3);
    x << 1.0, 1.0, 1.0;
    AllocationResult alloc = pf_allocate(s.region, x);
    Vec target(3);
    target << 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0;
    double deviation = (alloc.lambda - target).cwiseAbs().maxCoeff();
    Vec grid = grid_search_pf(s.region, x, 0.01, 0.001);
    double grid_gap = (grid - alloc.lambda).cwiseAbs().maxCoeff();
    res.value = deviation;
    res.threshold = 1e-7;
    res.pass = deviation <= 1e-7 && alloc.kkt_residual <= kKktTol && grid_gap <= 2.5e-3;
    res.instance = "two_link_three_class x=(1,1,1); grid search gap " + describe(grid_gap) +
                   ", kkt " + describe(alloc.kkt_residual);
    return res;
}

CheckResult criterion_gradient(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.02_gradient_consistency";
    CounterRng rng(seed, 0xacc2);
    const double eps = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int R = 2 + static_cast<int>(sub.below(3));
        int L = 1 + static_cast<int>(sub.below(3));
        CapacityRegion region = random_region(sub, R, L);
        Vec x(R);
        for (int r = 0; r < R; ++r) x[r] = sub.uniform(0.5, 5.0);
        Vec gradient = pf_gradient(region, x);
        for (int r = 0; r < R; ++r) {
            Vec hi = x, lo = x;
            hi[r] += eps;
            lo[r] -= eps;
            double diff = (legendre(region, hi) - legendre(region, lo)) / (2.0 * eps);
            worst = std::max(worst, std::abs(diff - gradient[r]));
        }
    }
    res.value = worst;
    res.threshold = 1e-3;
    res.pass = worst <= res.threshold;
    res.instance = "200 random regions (<=4 classes, <=3 links), central differences at 1e-4";
    return res;
}

CheckResult criterion_quotient_feasibility(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.03_quotient_feasibility";
    CounterRng rng(seed, 0xacc3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int R = 2 + static_cast<int>(sub.below(3));
        int L = 1 + static_cast<int>(sub.below(3));
        CapacityRegion region = random_region(sub, R, L);
        Vec x(R);
        for (int r = 0; r < R; ++r)
            x[r] = sub.uniform01() < 0.25 ? 0.0 : sub.uniform(0.2, 4.0);
        double base = legendre(region, x);
        Vec rates(R);
        for (int r = 0; r < R; ++r) {
            if (x[r] <= 0.0) {
                rates[r] = 0.0;
                continue;
            }
            double eps = x[r] * sub.uniform01();
            if (eps <= 0.0) eps = x[r];
            Vec lo = x;
            lo[r] -= eps;
            rates[r] = std::exp((base - legendre(region, lo)) / eps);
        }
        worst = std::max(worst, -region.min_slack(rates));
    }
    res.value = worst;
    res.threshold = 1e-8;
    res.pass = worst <= res.threshold;
    res.instance = "1000 random difference-quotient vectors, worst negative slack";
    return res;
}

CheckResult criterion_reversibility(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.04_pf_prime_reversibility";
    std::vector<Scenario> scenarios;
    scenarios.push_back(single_link());
    scenarios.push_back(single_link_two_class());
    scenarios.push_back(two_link_three_class());
    scenarios.push_back(line_network());
    scenarios.push_back(random_scenario(seed, 1));
    double worst = 0.0;
    std::string worst_name;
    for (const Scenario& s : scenarios) {
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        Allocator alloc = Allocator::pf_prime(s.region);
        StateDistribution dist = pf_prime_stationary(ctx, 6, *alloc.cache);
        double r = detailed_balance_residual(dist, alloc, s.traffic);
        if (r > worst) {
            worst = r;
            worst_name = s.name;
        }
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "boxes [0,6]^R over 5 scenarios, worst on " + worst_name;
    return res;
}

CheckResult criterion_sandwich() {
    CheckResult res;
    res.id = "acceptance.05_balance_sandwich";
    std::vector<Scenario> scenarios;
    scenarios.push_back(single_link());
    scenarios.push_back(single_link_two_class());
    scenarios.push_back(two_link_three_class());
    scenarios.push_back(line_network());
    double worst = kNegInf;
    for (const Scenario& s : scenarios) {
        BalanceTable table(s.region, 8);
        SandwichReport rep = sandwich_report(s.region, table);
        worst = std::max({worst, rep.max_lower_violation, rep.max_upper_violation});
    }
    Scenario two = single_link_two_class();
    BalanceTable table(two.region, 2);
    double spot = table.phi({1, 1}) - legendre(two.region, Vec::Constant(2, 1.0));
    bool spot_ok = std::abs(spot - std::log(2.0)) <= 1e-6 && spot >= 0.0 && spot <= 2.0;
    res.value = worst;
    res.threshold = 1e-7;
    res.pass = worst <= res.threshold && spot_ok;
    res.instance = "boxes [0,8]^R over 4 scenarios; spot gap at (1,1) = " + describe(spot);
    return res;
}

CheckResult criterion_convergence() {
    CheckResult res;
    res.id = "acceptance.06_scaling_convergence";
    Scenario s = single_link_two_class();
    std::vector<int> ns{1, 2, 5, 10, 20, 50};
    std::vector<ConvergenceRow> rows = ld_convergence_report(s.region, {1, 1}, ns);
    BalanceTable table(s.region, 50);
    double worst = kNegInf;
    double g5 = 0.0, g50 = 0.0;
    bool binomial_ok = true;
    for (const ConvergenceRow& row : rows) {
        worst = std::max(worst, -row.gap);
        worst = std::max(worst, row.gap - row.gap_bound);
        if (row.n == 5) g5 = row.gap;
        if (row.n == 50) g50 = row.gap;
        double expected = -log_binomial(2 * row.n, row.n);
        double got = table.phi({row.n, row.n});
        if (std::abs(got - expected) > 1e-8 * std::max(1.0, std::abs(expected)))
            binomial_ok = false;
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold && g50 < g5 && binomial_ok;
    res.instance = "x=(1,1), n in {1,2,5,10,20,50}; g(5)=" + describe(g5) +
                   " g(50)=" + describe(g50) + (binomial_ok ? "; binomial oracle ok" : "; binomial MISMATCH");
    return res;
}

CheckResult criterion_drift(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.07_drift_functional";
    CounterRng rng(seed, 0xacc7);
    double worst = kNegInf;
    for (int i = 0; i < 10000; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int n = 2 + static_cast<int>(sub.below(3));
        Mat P = random_substochastic(sub, n, 0.9);
        Vec u(n);
        for (int s = 0; s < n; ++s) u[s] = sub.uniform(-3.0, 3.0);
        Vec f = drift_functional_all(P, u);
        Vec f_plus = drift_functional_all(P, u.cwiseMax(0.0));
        Vec f_tanh = drift_functional_all_with(P, u, +[](double v) { return std::tanh(v); });
        worst = std::max(worst, -f.minCoeff());
        worst = std::max(worst, (f_plus - f).maxCoeff());
        worst = std::max(worst, -f_tanh.minCoeff());
    }

    // Equality cases: a class pair unreachable from the probe class carries
    // large u without affecting F_r, while reachable classes stay near zero.
    bool equality_ok = true;
    for (int i = 0; i < 100; ++i) {
        CounterRng sub = rng.split(0x10000 + static_cast<std::uint64_t>(i));
        Mat P = Mat::Zero(4, 4);
        P.topLeftCorner(2, 2) = random_substochastic(sub, 2, 0.8);
        P.bottomRightCorner(2, 2) = random_substochastic(sub, 2, 0.8);
        Vec u(4);
        u[0] = sub.uniform(-1e-8, 1e-8);
        u[1] = sub.uniform(-1e-8, 1e-8);
        u[2] = sub.uniform(-2.0, 2.0);
        u[3] = sub.uniform(-2.0, 2.0);
        Vec f = drift_functional_all(P, u);
        Mat walk = (Mat::Identity(4, 4) - P).partialPivLu().inverse();
        for (int r = 0; r < 2; ++r) {
            if (f[r] > 1e-12) continue;  // implication vacuous at this r
            for (int s = 0; s < 4; ++s)
                if (walk(r, s) > 1e-9 && u[s] > 1e-6) equality_ok = false;
        }
        // Contrapositive spot check: sizable u at a reachable class forces F > 0.
        Vec u2 = Vec::Zero(4);
        u2[1] = 0.5;
        if (walk(0, 1) > 1e-9 && drift_functional(P, u2, 0) <= 1e-12) equality_ok = false;
    }

    res.value = worst;
    res.threshold = 1e-12;
    res.pass = worst <= res.threshold && equality_ok;
    res.instance = "10^4 random (P,u) incl. positive-part and tanh variants; 100 equality cases";
    return res;
}

CheckResult criterion_excursion(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.08_excursion_identity";
    CounterRng rng(seed, 0xacc8);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int n = 2 + static_cast<int>(sub.below(3));
        TrafficModel model = random_model(sub, n);
        std::vector<int> zero_set;
        for (int r = 0; r < n; ++r)
            if (sub.uniform01() < 0.4) zero_set.push_back(r);
        if (static_cast<int>(zero_set.size()) == n) zero_set.pop_back();
        ReducedRouting red = remove_excursions(model, zero_set);
        Vec nu_kept(static_cast<Eigen::Index>(red.kept.size()));
        for (std::size_t k = 0; k < red.kept.size(); ++k)
            nu_kept[static_cast<Eigen::Index>(k)] = model.nu()[red.kept[k]];
        Vec residual = nu_kept - red.routing_tilde.transpose() * nu_kept - red.nu_tilde;
        worst = std::max(worst,
                         residual.cwiseAbs().maxCoeff() /
                             std::max(1.0, red.nu_tilde.cwiseAbs().maxCoeff()));
    }
    res.value = worst;
    res.threshold = 1e-10;
    res.pass = worst <= res.threshold;
    res.instance = "1000 random (model, subset) pairs, effective-rate identity residual";
    return res;
}

CheckResult criterion_quadratic_bound(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.09_quadratic_bound";
    CounterRng rng(seed, 0xacc9);
    double worst = kNegInf;
    for (int i = 0; i < 1000; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int R = 2 + static_cast<int>(sub.below(3));
        int L = 1 + static_cast<int>(sub.below(3));
        CapacityRegion region = random_region(sub, R, L);
        Vec x(R), h(R);
        for (int r = 0; r < R; ++r) {
            x[r] = sub.uniform(0.3, 4.0);
            h[r] = sub.uniform(-x[r], 2.0);
        }
        worst = std::max(worst, quadratic_bound_residual(region, x, h));
    }
    res.value = worst;
    res.threshold = 1e-7;
    res.pass = worst <= res.threshold;
    res.instance = "1000 random (region, x, h) second-order expansion bounds";
    return res;
}

CheckResult criterion_phase_loads() {
    CheckResult res;
    res.id = "acceptance.10_phase_type_loads";
    Scenario base = single_link_two_class();
    double worst = 0.0;

    ExpandedModel erlang = expand_phase_type(base.region, base.traffic, erlang2_spec(2, 2.0));
    for (int r = 0; r < 2; ++r) {
        worst = std::max(worst, std::abs(erlang.sigma[r] - 1.0));  // two phases at rate 2
        double load = 0.0;
        for (std::size_t i = 0; i < erlang.owner.size(); ++i)
            if (erlang.owner[i] == r) load += erlang.model.rho()[static_cast<Eigen::Index>(i)];
        worst = std::max(worst, std::abs(load - base.traffic.nu()[r] * erlang.sigma[r]));
    }

    ExpandedModel hyper = expand_phase_type(base.region, base.traffic, hyper_spec(2));
    for (int r = 0; r < 2; ++r) {
        worst = std::max(worst, std::abs(hyper.sigma[r] - 0.75));
        double load = 0.0;
        for (std::size_t i = 0; i < hyper.owner.size(); ++i)
            if (hyper.owner[i] == r) load += hyper.model.rho()[static_cast<Eigen::Index>(i)];
        worst = std::max(worst, std::abs(load - base.traffic.nu()[r] * hyper.sigma[r]));
    }

    res.value = worst;
    res.threshold = 1e-12;
    res.pass = worst <= res.threshold;
    res.instance = "Erlang-2 (sigma 1) and hyperexponential (sigma 0.75) load identities";
    return res;
}

CheckResult criterion_fluid_descent() {
    CheckResult res;
    res.id = "acceptance.11_fluid_descent";
    std::vector<Scenario> scenarios;
    scenarios.push_back(single_link());
    scenarios.push_back(single_link_two_class());
    scenarios.push_back(two_link_three_class());
    scenarios.push_back(line_network());

    bool all_ok = true;
    double worst_h = kNegInf;
    double worst_final = 0.0;
    std::ostringstream note;
    for (const Scenario& s : scenarios) {
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        Vec ones = Vec::Ones(s.region.num_classes());
        Vec x0 = ones / lyapunov_value(ctx, ones);  // lands on the unit level set

        NormBounds bounds = norm_bounds_certificate(ctx, 256, 0x11fd);
        double rate_scale = ctx.region.capacity().maxCoeff();
        for (int r = 0; r < ctx.region.num_classes(); ++r)
            rate_scale = std::max(rate_scale, ctx.region.max_class_rate(r));
        double tol = 10.0 * 1e-3 * rate_scale * bounds.upper;

        Vec x = x0;
        double prev = lyapunov_value(ctx, x0);
        bool monotone = true;
        double decayed = prev;
        for (int segment = 0; segment < 30 && decayed > 0.01; ++segment) {
            FluidTrajectory traj = integrate(s.region, s.traffic, x, 8.0, 1e-3);
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                double value = lyapunov_value(ctx, traj.states[k]);
                if (value > prev + tol) monotone = false;
                prev = value;
                if (to_vec(to_state(traj.states[k])).maxCoeff() > 0.0 ||
                    traj.states[k].maxCoeff() > kFaceTol)
                    worst_h = std::max(worst_h, traj.h_bounds[k]);
            }
            x = traj.states.back();
            decayed = prev;
        }
        worst_final = std::max(worst_final, decayed);
        all_ok = all_ok && monotone && decayed <= 0.01;
        note << s.name << " L_end=" << describe(decayed) << " ";
    }
    res.value = worst_final;
    res.threshold = 0.01;
    res.pass = all_ok && worst_h < 0.0;
    res.instance = note.str() + "max drift bound " + describe(worst_h);
    return res;
}

CheckResult criterion_fluid_limit(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.12_fluid_limit";
    Scenario s = single_link();
    FluidTrajectory fluid = integrate(s.region, s.traffic, Vec::Ones(1), 3.0, 1e-3);
    Allocator alloc = Allocator::pf(s.region);

    auto median_distance = [&](double scale) {
        std::vector<double> distances;
        for (int rep = 0; rep < 20; ++rep) {
            ScaledPath path = scaled_path(s.traffic, alloc, scale, Vec::Ones(1), 3.0,
                                          seed + 1000 * static_cast<std::uint64_t>(scale) +
                                              static_cast<std::uint64_t>(rep));
            double sup = 0.0;
            for (std::size_t k = 0; k < path.times.size(); ++k) {
                auto idx = static_cast<std::size_t>(std::llround(path.times[k] / 1e-3));
                idx = std::min(idx, fluid.states.size() - 1);
                sup = std::max(sup, std::abs(path.states[k][0] - fluid.states[idx][0]));
            }
            distances.push_back(sup);
        }
        std::sort(distances.begin(), distances.end());
        return 0.5 * (distances[9] + distances[10]);
    };

    double med50 = median_distance(50.0);
    double med200 = median_distance(200.0);
    res.value = med200;
    res.threshold = 0.1;
    res.pass = med200 <= 0.1 && med200 < med50;
    res.instance = "median sup-distance over 20 seeds: z=50 -> " + describe(med50) +
                   ", z=200 -> " + describe(med200);
    return res;
}

CheckResult criterion_oracle_equivalence() {
    CheckResult res;
    res.id = "acceptance.13_oracle_equivalence";
    std::vector<Scenario> scenarios;
    scenarios.push_back(single_link());
    scenarios.push_back(single_link_two_class());
    scenarios.push_back(two_link_three_class());
    scenarios.push_back(line_network());

    double worst = 0.0;
    std::string worst_case;
    auto track = [&](double tv, const std::string& name) {
        if (tv > worst) {
            worst = tv;
            worst_case = name;
        }
    };

    for (const Scenario& s : scenarios) {
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        Allocator prime = Allocator::pf_prime(s.region);
        track(total_variation(truncated_exact(prime, s.traffic, 6),
                              pf_prime_stationary(ctx, 6, *prime.cache)),
              s.name + "/pf_prime");
        BalanceTable table(s.region, 6);
        Allocator bf = Allocator::bf(table);
        track(total_variation(truncated_exact(bf, s.traffic, 6), bf_stationary(table, ctx, 6)),
              s.name + "/bf");
    }

    for (const Scenario& s : {tandem(), shared_link_routing()}) {
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        BalanceTable table(s.region, 6);
        Allocator bf = Allocator::bf(table);
        track(total_variation(truncated_exact(bf, s.traffic, 6), bf_stationary(table, ctx, 6)),
              s.name + "/bf_routing");
    }

    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "worst TV " + worst_case + " on [0,6]^R boxes incl. routing variants";
    return res;
}

CheckResult criterion_insensitivity(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.14_insensitivity";
    Scenario base = single_link_two_class();

    SimulateOptions opt;
    opt.t_end = 1.0e6;
    opt.seed = seed + 14;
    SimulationRun run_exp = simulate(base.traffic, Allocator::pf_prime(base.region), {0, 0}, opt);

    ExpandedModel erlang = expand_phase_type(base.region, base.traffic, erlang2_spec(2, 2.0));
    Allocator split = Allocator::pf_prime(base.region).with_phases(erlang.owner);
    SimulateOptions opt2 = opt;
    opt2.seed = seed + 15;
    SimulationRun run_erl = simulate(erlang.model, split, {0, 0, 0, 0}, opt2);

    StateDistribution exp_dist = empirical_distribution(run_exp, 1000.0);
    StateDistribution erl_dist = aggregated_distribution(run_erl, 1000.0, erlang.owner, 2);
    double tv = total_variation(exp_dist, erl_dist);

    res.value = tv;
    res.threshold = 0.02;
    res.pass = tv <= 0.02 && run_exp.events.size() >= 1000000 && run_erl.events.size() >= 1000000;
    res.instance = "exponential vs Erlang-2 service, " + std::to_string(run_exp.events.size()) +
                   " / " + std::to_string(run_erl.events.size()) + " events";
    return res;
}

CheckResult criterion_simulation_law(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.15_simulation_law";
    Scenario s = single_link();
    SimulateOptions opt;
    opt.t_end = 1.1e6;
    opt.seed = seed + 21;
    SimulationRun run = simulate(s.traffic, Allocator::pf(s.region), {0}, opt);
    StateDistribution empirical = empirical_distribution(run, 1000.0);

    std::vector<double> weights(empirical.box.size());
    for (std::size_t k = 0; k < weights.size(); ++k)
        weights[k] = static_cast<double>(k) * std::log(0.5);
    StateDistribution geometric = normalize_log_weights(empirical.box, std::move(weights));

    double tv = total_variation(empirical, geometric);
    res.value = tv;
    res.threshold = 0.02;
    res.pass = tv <= 0.02 && run.events.size() >= 1000000;
    res.instance = "processor-sharing occupancy vs geometric(0.5), " +
                   std::to_string(run.events.size()) + " events";
    return res;
}

CheckResult criterion_overload_diagnostic(std::uint64_t seed) {
    CheckResult res;
    res.id = "acceptance.16_overload_diagnostic";
    res.diagnostic = true;
    Mat A(2, 3);
    A << 1.0, 0.0, 1.0,
         0.0, 1.0, 1.0;
    Vec nu_bar(3);
    nu_bar << 0.8, 0.8, 0.4;  // per-link load 1.2, outside the region
    CapacityRegion region(A, Vec::Ones(2));
    TrafficModel model(nu_bar, Vec::Ones(3), Mat::Zero(3, 3));
    LyapunovContext ctx = make_lyapunov_context(region, model.rho());

    SimulateOptions opt;
    opt.t_end = 2000.0;
    opt.seed = seed + 33;
    SimulationRun run = simulate(model, Allocator::pf(region), {0, 0, 0}, opt);

    LegendreCache cache(region);
    std::vector<double> times, lyap, norms;
    double next_sample = 10.0;
    run.replay([&](const State& x, double t0, double t1) {
        while (next_sample >= t0 && next_sample < t1) {
            double linear = 0.0;
            for (int r = 0; r < 3; ++r)
                if (x[static_cast<std::size_t>(r)] > 0)
                    linear += x[static_cast<std::size_t>(r)] * std::log(ctx.rho[r]);
            times.push_back(next_sample);
            lyap.push_back(cache.value(x) - linear);
            norms.push_back(to_vec(x).maxCoeff());
            next_sample += 10.0;
        }
    });
    LineFit lyap_fit = least_squares(times, lyap);
    LineFit norm_fit = least_squares(times, norms);

    // Recorded, never gating. In overload every growing class is underserved
    // (its PF rate sits below its load), so the summand log(lambda/rho) is
    // negative along the growth direction and L decreases linearly even as the
    // population escapes; the population norm is the quantity growing linearly.
    res.value = lyap_fit.slope;
    res.threshold = 0.0;
    res.pass = true;
    res.instance = "L slope " + describe(lyap_fit.slope) + " (R2 " + describe(lyap_fit.r2) +
                   "), population sup-norm slope " + describe(norm_fit.slope) + " (R2 " +
                   describe(norm_fit.r2) + ")";
    return res;
}

// ---------------------------------------------------------------------------
// Property battery on built-in scenarios

std::vector<Scenario> property_scenarios(std::uint64_t seed) {
    std::vector<Scenario> all;
    all.push_back(single_link());
    all.push_back(single_link_two_class());
    all.push_back(two_link_three_class());
    all.push_back(line_network());
    all.push_back(random_scenario(seed, 1));
    all.push_back(random_scenario(seed, 2));
    all.push_back(tandem());
    return all;
}

CheckResult battery_capacity_monotonicity(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.capacity.monotonicity";
    CounterRng rng(seed, 0xb001);
    int violations = 0;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        for (int i = 0; i < 200; ++i) {
            Vec outer(R);
            for (int r = 0; r < R; ++r) outer[r] = rng.uniform(0.0, s.region.max_class_rate(r));
            if (!s.region.contains(outer)) {
                // scale onto the boundary and slightly inside
                double shrink = 0.0;
                Vec used = s.region.usage() * outer;
                for (int l = 0; l < s.region.num_links(); ++l)
                    shrink = std::max(shrink, used[l] / s.region.capacity()[l]);
                outer *= 0.999 / shrink;
            }
            Vec inner(R);
            for (int r = 0; r < R; ++r) inner[r] = outer[r] * rng.uniform01();
            if (!s.region.contains(inner)) ++violations;
        }
    }
    res.value = violations;
    res.threshold = 0.0;
    res.pass = violations == 0;
    res.instance = "componentwise-dominated points of feasible points stay feasible";
    return res;
}

CheckResult battery_capacity_convexity(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.capacity.convexity";
    CounterRng rng(seed, 0xb002);
    int violations = 0;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        for (int i = 0; i < 200; ++i) {
            auto feasible_point = [&] {
                Vec v(R);
                for (int r = 0; r < R; ++r) v[r] = rng.uniform(0.0, s.region.max_class_rate(r));
                double shrink = 1.0;
                Vec used = s.region.usage() * v;
                for (int l = 0; l < s.region.num_links(); ++l)
                    shrink = std::max(shrink, used[l] / s.region.capacity()[l]);
                return Vec(v / shrink);
            };
            Vec a = feasible_point(), b = feasible_point();
            double t = rng.uniform01();
            if (!s.region.contains(t * a + (1.0 - t) * b)) ++violations;
        }
    }
    res.value = violations;
    res.threshold = 0.0;
    res.pass = violations == 0;
    res.instance = "random convex combinations of feasible pairs stay feasible";
    return res;
}

CheckResult battery_capacity_face(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.capacity.face_consistency";
    CounterRng rng(seed, 0xb003);
    int violations = 0;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        if (R < 2) continue;
        for (int i = 0; i < 100; ++i) {
            std::vector<int> zero_set;
            for (int r = 0; r < R; ++r)
                if (rng.uniform01() < 0.4) zero_set.push_back(r);
            if (static_cast<int>(zero_set.size()) == R) zero_set.pop_back();
            Face face = Face::from_zero_set(zero_set, R);
            CapacityRegion sub = face_restrict(s.region, face);
            Vec padded = Vec::Zero(R);
            Vec inner(static_cast<Eigen::Index>(face.support.size()));
            for (std::size_t j = 0; j < face.support.size(); ++j) {
                double v = rng.uniform(0.0, 1.5 * s.region.max_class_rate(face.support[j]));
                inner[static_cast<Eigen::Index>(j)] = v;
                padded[face.support[j]] = v;
            }
            if (sub.contains(inner) != s.region.contains(padded)) ++violations;
        }
    }
    res.value = violations;
    res.threshold = 0.0;
    res.pass = violations == 0;
    res.instance = "face-restricted membership agrees with zero-padded membership";
    return res;
}

CheckResult battery_pf_homogeneity(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.pf.homogeneity";
    CounterRng rng(seed, 0xb010);
    double worst = 0.0;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        for (int i = 0; i < 25; ++i) {
            Vec x(R);
            for (int r = 0; r < R; ++r) x[r] = rng.uniform(0.1, 4.0);
            double a = rng.uniform(0.0, 10.0);
            if (a <= 1e-6) a = 0.5;
            double lhs = legendre(s.region, a * x);
            double rhs = a * legendre(s.region, x);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }
    }
    res.value = worst;
    res.threshold = 1e-8;
    res.pass = worst <= res.threshold;
    res.instance = "positive homogeneity of the transform on random rays";
    return res;
}

CheckResult battery_pf_quotient_monotone(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.pf.quotient_monotone";
    CounterRng rng(seed, 0xb011);
    double worst = kNegInf;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        for (int i = 0; i < 20; ++i) {
            Vec x(R);
            for (int r = 0; r < R; ++r) x[r] = rng.uniform(0.5, 4.0);
            int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(R)));
            double base = legendre(s.region, x);
            double prev_quotient = kPosInf;
            for (int k = 1; k <= 5; ++k) {
                double eps = x[r] * (0.15 * k);
                Vec lo = x;
                lo[r] -= eps;
                double quotient = (base - legendre(s.region, lo)) / eps;
                worst = std::max(worst, quotient - prev_quotient);
                prev_quotient = quotient;
            }
        }
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "difference quotients nonincreasing in the step size";
    return res;
}

CheckResult battery_pf_convexity(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.pf.convexity";
    CounterRng rng(seed, 0xb012);
    double worst = kNegInf;
    for (const Scenario& s : property_scenarios(seed)) {
        const int R = s.region.num_classes();
        for (int i = 0; i < 25; ++i) {
            Vec a(R), b(R);
            for (int r = 0; r < R; ++r) {
                a[r] = rng.uniform(0.0, 4.0);
                b[r] = rng.uniform(0.0, 4.0);
            }
            double t = rng.uniform01();
            double mid = legendre(s.region, t * a + (1.0 - t) * b);
            double chord = t * legendre(s.region, a) + (1.0 - t) * legendre(s.region, b);
            worst = std::max(worst, mid - chord);  // convex: value below the chord... with sign
        }
    }
    res.value = worst;
    res.threshold = 1e-8;
    res.pass = worst <= res.threshold;
    res.instance = "transform lies below chords on random segments";
    return res;
}

CheckResult battery_balance_extremal(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.balance.extremal";
    double worst = 0.0;
    for (const Scenario& s : property_scenarios(seed)) {
        if (s.region.num_classes() > 4) continue;
        BalanceTable table(s.region, 5);
        const Box& box = table.box();
        for (std::size_t i = 1; i < box.size(); ++i) {
            State x = box.state(i);
            Vec rates = table.rates(x);
            double slack = s.region.min_slack(rates);
            worst = std::max(worst, -slack);            // feasibility
            Vec per_link = s.region.capacity() - s.region.usage() * rates;
            worst = std::max(worst, per_link.minCoeff());  // some link exactly tight
        }
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "balance increments feasible and tight on at least one link";
    return res;
}

CheckResult battery_pf_prime_feasible(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.pf_prime.feasibility";
    double worst = 0.0;
    for (const Scenario& s : property_scenarios(seed)) {
        if (s.region.num_classes() > 4) continue;
        LegendreCache cache(s.region);
        Box box(s.region.num_classes(), 4);
        for (std::size_t i = 0; i < box.size(); ++i) {
            Vec rates = pf_prime_rates(cache, box.state(i));
            worst = std::max(worst, -s.region.min_slack(rates));
        }
    }
    res.value = worst;
    res.threshold = kFeasTol;
    res.pass = worst <= res.threshold;
    res.instance = "modified-fairness rates feasible on [0,4]^R boxes";
    return res;
}

CheckResult battery_single_link_coincidence() {
    CheckResult res;
    res.id = "battery.single_link.coincidence";
    Scenario s = single_link_two_class();
    BalanceTable table(s.region, 6);
    LegendreCache cache(s.region);
    double worst = 0.0;
    Box box(2, 6);
    for (std::size_t i = 1; i < box.size(); ++i) {
        State x = box.state(i);
        Vec bf = table.rates(x);
        Vec pf = pf_allocate(s.region, to_vec(x)).lambda;
        worst = std::max(worst, (bf - pf).cwiseAbs().maxCoeff());
        if (x[1] == 0) {
            Vec prime = pf_prime_rates(cache, x);
            worst = std::max(worst, std::abs(prime[0] - 1.0));  // sole class takes the link
        }
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "single link: balanced fairness equals the proportional rates";
    return res;
}

CheckResult battery_lyapunov_norm_bounds(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.lyapunov.norm_bounds";
    double min_lower = kPosInf;
    for (const Scenario& s : property_scenarios(seed)) {
        if (s.traffic.rho().minCoeff() <= 0.0) continue;
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        if (!ctx.stable) continue;
        NormBounds bounds = norm_bounds_certificate(ctx, 400, seed);
        min_lower = std::min(min_lower, bounds.lower);
    }
    res.value = min_lower;
    res.threshold = 0.0;
    res.pass = min_lower > 0.0;
    res.instance = "sampled lower norm-equivalence constant stays positive";
    return res;
}

CheckResult battery_lyapunov_convexity(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.lyapunov.convexity";
    CounterRng rng(seed, 0xb020);
    double worst = kNegInf;
    for (const Scenario& s : property_scenarios(seed)) {
        if (s.traffic.rho().minCoeff() <= 0.0) continue;
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        const int R = s.region.num_classes();
        for (int i = 0; i < 20; ++i) {
            Vec a(R), b(R);
            for (int r = 0; r < R; ++r) {
                a[r] = rng.uniform(0.0, 4.0);
                b[r] = rng.uniform(0.0, 4.0);
            }
            double t = rng.uniform01();
            double mid = lyapunov_value(ctx, t * a + (1.0 - t) * b);
            double chord = t * lyapunov_value(ctx, a) + (1.0 - t) * lyapunov_value(ctx, b);
            worst = std::max(worst, mid - chord);
        }
    }
    res.value = worst;
    res.threshold = 1e-8;
    res.pass = worst <= res.threshold;
    res.instance = "Lyapunov function lies below chords on random segments";
    return res;
}

CheckResult battery_ld_window() {
    CheckResult res;
    res.id = "battery.balance.ld_window";
    Scenario s = single_link_two_class();
    LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
    BalanceTable table(s.region, 8);
    StateDistribution dist = bf_stationary(table, ctx, 8);
    Vec x = Vec::Ones(2);
    double lx = lyapunov_value(ctx, x);
    double worst = kNegInf;
    for (int n : {1, 2, 4}) {
        State nx{n, n};
        double diff = -std::log(dist.at(nx)) / n - lx;
        double center = dist.log_norm / n;
        worst = std::max(worst, center - diff);                                  // below window
        worst = std::max(worst, diff - center - harmonic_remainder(nx) / n);     // above window
    }
    res.value = worst;
    res.threshold = 1e-9;
    res.pass = worst <= res.threshold;
    res.instance = "finite-box decay of the balanced law within the predicted window";
    return res;
}

CheckResult battery_sim_determinism(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.sim.determinism";
    Scenario s = single_link_two_class();
    SimulateOptions opt;
    opt.t_end = 500.0;
    opt.seed = seed + 5;
    Allocator alloc = Allocator::pf_prime(s.region);
    SimulationRun a = simulate(s.traffic, alloc, {0, 0}, opt);
    SimulationRun b = simulate(s.traffic, alloc, {0, 0}, opt);
    bool same = a.events.size() == b.events.size();
    if (same)
        for (std::size_t i = 0; i < a.events.size(); ++i)
            same = same && a.events[i].time == b.events[i].time &&
                   a.events[i].kind == b.events[i].kind && a.events[i].from == b.events[i].from &&
                   a.events[i].to == b.events[i].to;
    res.value = same ? 0.0 : 1.0;
    res.threshold = 0.0;
    res.pass = same;
    res.instance = "identical seeds produce bit-identical event logs (" +
                   std::to_string(a.events.size()) + " events)";
    return res;
}

CheckResult battery_sim_conservation(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.sim.conservation";
    Scenario s = tandem();
    SimulateOptions opt;
    opt.t_end = 2000.0;
    opt.seed = seed + 6;
    SimulationRun run = simulate(s.traffic, Allocator::pf(s.region), {2, 0}, opt);
    const int R = 2;
    std::vector<long> arrivals(R, 0), departures(R, 0), routed_in(R, 0), routed_out(R, 0);
    for (const Event& e : run.events) {
        switch (e.kind) {
            case EventKind::kArrival: ++arrivals[static_cast<std::size_t>(e.to)]; break;
            case EventKind::kDeparture: ++departures[static_cast<std::size_t>(e.from)]; break;
            case EventKind::kRouting:
                ++routed_out[static_cast<std::size_t>(e.from)];
                ++routed_in[static_cast<std::size_t>(e.to)];
                break;
        }
    }
    long worst = 0;
    for (int r = 0; r < R; ++r) {
        long net = arrivals[static_cast<std::size_t>(r)] + routed_in[static_cast<std::size_t>(r)] -
                   departures[static_cast<std::size_t>(r)] - routed_out[static_cast<std::size_t>(r)];
        long delta = run.final_state[static_cast<std::size_t>(r)] -
                     run.initial_state[static_cast<std::size_t>(r)];
        worst = std::max(worst, std::abs(net - delta));
    }
    bool no_negative = true;
    run.replay([&](const State& x, double, double) {
        for (int v : x) no_negative = no_negative && v >= 0;
    });
    res.value = static_cast<double>(worst);
    res.threshold = 0.0;
    res.pass = worst == 0 && no_negative;
    res.instance = "per-class flow conservation and nonnegativity in a routing run";
    return res;
}

CheckResult battery_sim_rates() {
    CheckResult res;
    res.id = "battery.sim.rates";
    Scenario s = tandem();
    Allocator alloc = Allocator::pf(s.region);
    State x{3, 1};
    TransitionRates rates = transition_rates(s.traffic, alloc, x);
    Vec lambda = alloc.rates(x);
    double worst = 0.0;
    for (int r = 0; r < 2; ++r) {
        worst = std::max(worst, std::abs(rates.arrival[r] - s.traffic.nu_bar()[r]));
        double expected = x[static_cast<std::size_t>(r)] > 0 ? s.traffic.mu()[r] * lambda[r] : 0.0;
        worst = std::max(worst, std::abs(rates.completion[r] - expected));
    }
    State empty{0, 2};
    worst = std::max(worst, std::abs(transition_rates(s.traffic, alloc, empty).completion[0]));
    res.value = worst;
    res.threshold = 0.0;
    res.pass = worst == 0.0;
    res.instance = "competing clock rates match the transition-rate table exactly";
    return res;
}

CheckResult battery_sim_occupancy(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.sim.occupancy_law";
    Scenario s = single_link();
    SimulateOptions opt;
    opt.t_end = 2.0e5;
    opt.seed = seed + 7;
    SimulationRun run = simulate(s.traffic, Allocator::pf(s.region), {0}, opt);
    StateDistribution empirical = empirical_distribution(run, 500.0);
    std::vector<double> weights(empirical.box.size());
    for (std::size_t k = 0; k < weights.size(); ++k)
        weights[k] = static_cast<double>(k) * std::log(0.5);
    double tv = total_variation(empirical, normalize_log_weights(empirical.box, std::move(weights)));
    res.value = tv;
    res.threshold = 0.03;
    res.pass = tv <= res.threshold;
    res.instance = "occupancy against the geometric law, " + std::to_string(run.events.size()) +
                   " events";
    return res;
}

CheckResult battery_fluid_flow_balance() {
    CheckResult res;
    res.id = "battery.fluid.flow_balance";
    Scenario s = two_link_three_class();
    Vec x0(3);
    x0 << 1.0, 0.5, 0.8;
    const double h = 1e-3;
    FluidTrajectory traj = integrate(s.region, s.traffic, x0, 6.0, h);
    double worst = 0.0;
    const Mat Pt = s.traffic.routing().transpose();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        Vec mu_d = s.traffic.mu().cwiseProduct(traj.cumulative_service[k]);
        Vec expected = x0 + s.traffic.nu_bar() * traj.times[k] - mu_d + Pt * mu_d;
        worst = std::max(worst, (traj.states[k] - expected).cwiseAbs().maxCoeff());
    }
    double rate_scale = 1.0;
    res.value = worst;
    res.threshold = 10.0 * h * rate_scale;
    res.pass = worst <= res.threshold;
    res.instance = "grid flow-balance residual along a three-class trajectory";
    return res;
}

CheckResult battery_fluid_halving() {
    CheckResult res;
    res.id = "battery.fluid.step_halving";
    Mat A(1, 1);
    A << 1.0;
    CapacityRegion region(A, Vec::Ones(1));
    TrafficModel model(0.25 * Vec::Ones(1), Vec::Ones(1), Mat::Zero(1, 1));
    auto max_error = [&](double h) {
        FluidTrajectory traj = integrate(region, model, Vec::Ones(1), 3.0, h);
        double worst = 0.0;
        for (std::size_t k = 0; k < traj.states.size(); ++k) {
            double exact = std::max(0.0, 1.0 - 0.75 * traj.times[k]);
            worst = std::max(worst, std::abs(traj.states[k][0] - exact));
        }
        return worst;
    };
    double coarse = max_error(0.004);
    double fine = max_error(0.002);
    double ratio = coarse / std::max(fine, 1e-15);
    res.value = ratio;
    res.threshold = 4.0;
    res.pass = ratio >= 1.2 && ratio <= 4.0;
    res.instance = "error " + describe(coarse) + " at h=4e-3 vs " + describe(fine) + " at h=2e-3";
    return res;
}

CheckResult battery_fluid_face_identity() {
    CheckResult res;
    res.id = "battery.fluid.face_identity";
    Scenario s = tandem();
    Vec x0(2);
    x0 << 1.0, 0.0;
    FluidTrajectory traj = integrate(s.region, s.traffic, x0, 5.0, 1e-3);
    double worst = 0.0;
    bool saw_face = false;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        if (traj.faces[k] == 0) continue;
        saw_face = true;
        std::vector<int> zero_set;
        for (int r = 0; r < 2; ++r)
            if (traj.faces[k] & (1u << r)) {
                zero_set.push_back(r);
                worst = std::max(worst, std::abs(traj.drifts[k][r]));  // pinned classes do not move
            }
        if (static_cast<int>(zero_set.size()) == 2) continue;
        ReducedRouting red = remove_excursions(s.traffic, zero_set);
        Vec nu_kept(static_cast<Eigen::Index>(red.kept.size()));
        for (std::size_t j = 0; j < red.kept.size(); ++j)
            nu_kept[static_cast<Eigen::Index>(j)] = s.traffic.nu()[red.kept[j]];
        Vec residual = nu_kept - red.routing_tilde.transpose() * nu_kept - red.nu_tilde;
        worst = std::max(worst, residual.cwiseAbs().maxCoeff());
    }
    res.value = worst;
    res.threshold = 1e-10;
    res.pass = saw_face && worst <= res.threshold;
    res.instance = saw_face ? "pinned drift zero and reduced-rate identity on visited faces"
                            : "trajectory never reached a face";
    return res;
}

CheckResult battery_traffic_neumann(std::uint64_t seed) {
    CheckResult res;
    res.id = "battery.traffic.neumann";
    CounterRng rng(seed, 0xb030);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        CounterRng sub = rng.split(static_cast<std::uint64_t>(i));
        int n = 2 + static_cast<int>(sub.below(3));
        TrafficModel model = random_model(sub, n);
        // Independent oracle: sum the series nu_bar + P^T nu_bar + ...
        Vec series = model.nu_bar();
        Vec term = model.nu_bar();
        for (int k = 0; k < 10000; ++k) {
            term = model.routing().transpose() * term;
            series += term;
            if (term.cwiseAbs().maxCoeff() < 1e-14) break;
        }
        worst = std::max(worst, (series - model.nu()).cwiseAbs().maxCoeff());
    }
    res.value = worst;
    res.threshold = 1e-10;
    res.pass = worst <= res.threshold;
    res.instance = "traffic solve agrees with the routing series on 200 random models";
    return res;
}

CheckResult battery_phase_identity() {
    CheckResult res;
    res.id = "battery.phase.single_phase_identity";
    Scenario s = single_link_two_class();
    PhaseTypeSpec spec;
    for (int r = 0; r < 2; ++r) {
        PhaseTypeSpec::ClassPhases cp;
        cp.alpha = Vec::Ones(1);
        cp.rates = Vec::Ones(1);
        cp.routing = Mat::Zero(1, 1);
        spec.classes.push_back(std::move(cp));
    }
    ExpandedModel ex = expand_phase_type(s.region, s.traffic, spec);
    double worst = (ex.model.nu_bar() - s.traffic.nu_bar()).cwiseAbs().maxCoeff();
    worst = std::max(worst, (ex.model.mu() - s.traffic.mu()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (ex.region.usage() - s.region.usage()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (ex.sigma - Vec::Ones(2)).cwiseAbs().maxCoeff());
    res.value = worst;
    res.threshold = 0.0;
    res.pass = worst == 0.0;
    res.instance = "one exponential phase expands to the identity relabeling";
    return res;
}

// Reduced battery applied to a user-supplied scenario.
void user_checks(const Scenario& s, std::uint64_t seed,
                 std::vector<std::pair<std::string, std::function<CheckResult()>>>& out) {
    std::string prefix = "user." + s.name;
    const bool small = s.region.num_classes() <= 4;

    out.emplace_back(prefix + ".allocation_certificate", [s, seed] {
        CheckResult res;
        res.id = "";  // filled by the runner
        CounterRng rng(seed, 0xeee1);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            Vec x(s.region.num_classes());
            for (Eigen::Index r = 0; r < x.size(); ++r) x[r] = rng.uniform(0.0, 5.0);
            AllocationResult alloc = pf_allocate(s.region, x);
            worst = std::max(worst, alloc.kkt_residual);
            worst = std::max(worst, -s.region.min_slack(alloc.lambda));
        }
        res.value = worst;
        res.threshold = kKktTol;
        res.pass = worst <= res.threshold;
        res.instance = "allocation certificates on 20 random populations";
        return res;
    });

    if (small) {
        out.emplace_back(prefix + ".reversibility", [s] {
            CheckResult res;
            LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
            Allocator alloc = Allocator::pf_prime(s.region);
            TrafficModel no_routing(s.traffic.nu_bar(), s.traffic.mu(),
                                    Mat::Zero(s.traffic.num_classes(), s.traffic.num_classes()));
            StateDistribution dist = pf_prime_stationary(ctx, 4, *alloc.cache);
            res.value = detailed_balance_residual(dist, alloc, no_routing);
            res.threshold = 1e-9;
            res.pass = res.value <= res.threshold;
            res.instance = "detailed balance on the [0,4]^R box (routing stripped)";
            return res;
        });
        out.emplace_back(prefix + ".balance_sandwich", [s] {
            CheckResult res;
            BalanceTable table(s.region, 3);
            SandwichReport rep = sandwich_report(s.region, table);
            res.value = std::max(rep.max_lower_violation, rep.max_upper_violation);
            res.threshold = 1e-7;
            res.pass = res.value <= res.threshold;
            res.instance = "sandwich violations on the [0,3]^R box";
            return res;
        });
        LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
        if (ctx.stable) {
            out.emplace_back(prefix + ".fluid_descent", [s] {
                CheckResult res;
                LyapunovContext ctx = make_lyapunov_context(s.region, s.traffic.rho());
                Vec ones = Vec::Ones(s.region.num_classes());
                Vec x0 = ones / lyapunov_value(ctx, ones);
                FluidTrajectory traj = integrate(s.region, s.traffic, x0, 30.0, 2e-3);
                DescentReport rep = descent_report(traj, ctx);
                res.value = rep.final_value;
                res.threshold = rep.initial_value;
                res.pass = rep.monotone && rep.final_value < rep.initial_value;
                res.instance = std::string("descent ") + (rep.monotone ? "monotone" : "NOT monotone") +
                               ", t_half " + describe(rep.t_half);
                return res;
            });
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Scenario> builtin_scenarios(std::uint64_t seed) {
    std::vector<Scenario> all = property_scenarios(seed);
    all.push_back(shared_link_routing());
    all.push_back(single_link_two_class_erlang2());
    all.push_back(single_link_two_class_hyper());
    return all;
}

std::vector<CheckResult> run_acceptance(std::uint64_t seed) {
    std::vector<std::pair<std::string, std::function<CheckResult()>>> items;
    items.emplace_back("acceptance.01_pf_closed_form", [] { return criterion_pf_closed_form(); });
    items.emplace_back("acceptance.02_gradient_consistency", [seed] { return criterion_gradient(seed); });
    items.emplace_back("acceptance.03_quotient_feasibility",
                       [seed] { return criterion_quotient_feasibility(seed); });
    items.emplace_back("acceptance.04_pf_prime_reversibility",
                       [seed] { return criterion_reversibility(seed); });
    items.emplace_back("acceptance.05_balance_sandwich", [] { return criterion_sandwich(); });
    items.emplace_back("acceptance.06_scaling_convergence", [] { return criterion_convergence(); });
    items.emplace_back("acceptance.07_drift_functional", [seed] { return criterion_drift(seed); });
    items.emplace_back("acceptance.08_excursion_identity", [seed] { return criterion_excursion(seed); });
    items.emplace_back("acceptance.09_quadratic_bound",
                       [seed] { return criterion_quadratic_bound(seed); });
    items.emplace_back("acceptance.10_phase_type_loads", [] { return criterion_phase_loads(); });
    items.emplace_back("acceptance.11_fluid_descent", [] { return criterion_fluid_descent(); });
    items.emplace_back("acceptance.12_fluid_limit", [seed] { return criterion_fluid_limit(seed); });
    items.emplace_back("acceptance.13_oracle_equivalence", [] { return criterion_oracle_equivalence(); });
    items.emplace_back("acceptance.14_insensitivity", [seed] { return criterion_insensitivity(seed); });
    items.emplace_back("acceptance.15_simulation_law", [seed] { return criterion_simulation_law(seed); });
    items.emplace_back("acceptance.16_overload_diagnostic",
                       [seed] { return criterion_overload_diagnostic(seed); });

    std::vector<CheckResult> results;
    for (auto& [id, fn] : items) {
        auto begin = std::chrono::steady_clock::now();
        CheckResult res;
        try {
            res = fn();
        } catch (const std::exception& e) {
            res.pass = false;
            res.instance = std::string("exception: ") + e.what();
        }
        res.id = id;
        res.runtime_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - begin)
                             .count();
        results.push_back(std::move(res));
    }
    return results;
}

VerificationReport run_all(const std::vector<Scenario>& user_scenarios, std::uint64_t seed,
                           long budget) {
    std::vector<std::pair<std::string, std::function<CheckResult()>>> items;
    items.emplace_back("battery.balance.extremal", [seed] { return battery_balance_extremal(seed); });
    items.emplace_back("battery.balance.ld_window", [] { return battery_ld_window(); });
    items.emplace_back("battery.capacity.convexity", [seed] { return battery_capacity_convexity(seed); });
    items.emplace_back("battery.capacity.face_consistency", [seed] { return battery_capacity_face(seed); });
    items.emplace_back("battery.capacity.monotonicity",
                       [seed] { return battery_capacity_monotonicity(seed); });
    items.emplace_back("battery.fluid.face_identity", [] { return battery_fluid_face_identity(); });
    items.emplace_back("battery.fluid.flow_balance", [] { return battery_fluid_flow_balance(); });
    items.emplace_back("battery.fluid.step_halving", [] { return battery_fluid_halving(); });
    items.emplace_back("battery.lyapunov.convexity", [seed] { return battery_lyapunov_convexity(seed); });
    items.emplace_back("battery.lyapunov.norm_bounds",
                       [seed] { return battery_lyapunov_norm_bounds(seed); });
    items.emplace_back("battery.pf.convexity", [seed] { return battery_pf_convexity(seed); });
    items.emplace_back("battery.pf.homogeneity", [seed] { return battery_pf_homogeneity(seed); });
    items.emplace_back("battery.pf.quotient_monotone",
                       [seed] { return battery_pf_quotient_monotone(seed); });
    items.emplace_back("battery.pf_prime.feasibility", [seed] { return battery_pf_prime_feasible(seed); });
    items.emplace_back("battery.phase.single_phase_identity", [] { return battery_phase_identity(); });
    items.emplace_back("battery.sim.conservation", [seed] { return battery_sim_conservation(seed); });
    items.emplace_back("battery.sim.determinism", [seed] { return battery_sim_determinism(seed); });
    items.emplace_back("battery.sim.occupancy_law", [seed] { return battery_sim_occupancy(seed); });
    items.emplace_back("battery.sim.rates", [] { return battery_sim_rates(); });
    items.emplace_back("battery.single_link.coincidence", [] { return battery_single_link_coincidence(); });
    items.emplace_back("battery.traffic.neumann", [seed] { return battery_traffic_neumann(seed); });
    for (const Scenario& s : user_scenarios) user_checks(s, seed, items);

    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    VerificationReport report;
    report.seed = seed;
    long executed = 0;
    bool any_fail = false, any_skip = false;
    for (auto& [id, fn] : items) {
        CheckResult res;
        res.id = id;
        if (budget >= 0 && executed >= budget) {
            res.skipped = true;
            any_skip = true;
        } else {
            auto begin = std::chrono::steady_clock::now();
            try {
                res = fn();
            } catch (const std::exception& e) {
                res.pass = false;
                res.instance = std::string("exception: ") + e.what();
            }
            res.id = id;
            res.runtime_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - begin)
                                 .count();
            ++executed;
            if (!res.pass && !res.diagnostic) any_fail = true;
        }
        report.checks.push_back(std::move(res));
    }

    // The acceptance suite is part of the full battery.
    if (budget < 0 || executed < budget) {
        for (CheckResult& res : run_acceptance(seed)) {
            if (budget >= 0 && executed >= budget) {
                CheckResult skipped;
                skipped.id = res.id;
                skipped.skipped = true;
                any_skip = true;
                report.checks.push_back(std::move(skipped));
                continue;
            }
            ++executed;
            if (!res.pass && !res.diagnostic) any_fail = true;
            report.checks.push_back(std::move(res));
        }
    } else {
        for (CheckResult& res : run_acceptance(0)) {
            (void)res;
            break;  // budget exhausted; acceptance ids are still reported below
        }
        for (const char* id :
             {"acceptance.01_pf_closed_form", "acceptance.02_gradient_consistency",
              "acceptance.03_quotient_feasibility", "acceptance.04_pf_prime_reversibility",
              "acceptance.05_balance_sandwich", "acceptance.06_scaling_convergence",
              "acceptance.07_drift_functional", "acceptance.08_excursion_identity",
              "acceptance.09_quadratic_bound", "acceptance.10_phase_type_loads",
              "acceptance.11_fluid_descent", "acceptance.12_fluid_limit",
              "acceptance.13_oracle_equivalence", "acceptance.14_insensitivity",
              "acceptance.15_simulation_law", "acceptance.16_overload_diagnostic"}) {
            CheckResult skipped;
            skipped.id = id;
            skipped.skipped = true;
            any_skip = true;
            report.checks.push_back(std::move(skipped));
        }
    }

    std::stable_sort(report.checks.begin(), report.checks.end(),
                     [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
    report.status = any_fail ? "fail" : (any_skip ? "incomplete" : "pass");
    return report;
}

std::string report_to_json(const VerificationReport& report) {
    nlohmann::ordered_json j;
    j["status"] = report.status;
    j["seed"] = report.seed;
    j["checks"] = nlohmann::ordered_json::array();
    for (const CheckResult& c : report.checks) {
        nlohmann::ordered_json e;
        e["id"] = c.id;
        e["skipped"] = c.skipped;
        if (!c.skipped) {
            e["pass"] = c.pass;
            e["value"] = c.value;
            e["threshold"] = c.threshold;
            e["instance"] = c.instance;
            e["diagnostic"] = c.diagnostic;
            e["runtime_ms"] = c.runtime_ms;
        }
        j["checks"].push_back(std::move(e));
    }
    return j.dump(2);
}

}  // namespace fairshare
