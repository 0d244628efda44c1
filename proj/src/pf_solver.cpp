#include "fairshare/pf_solver.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

namespace {

// Gradient of the utility sum: d/dlambda_r [x_r U_r(lambda_r/x_r)] = w_r (lambda_r/x_r)^{-alpha}.
// At alpha = 1 this is the familiar w_r x_r / lambda_r.
Vec utility_gradient(const Vec& x, const Vec& w, double alpha, const Vec& lambda) {
    Vec g(x.size());
    for (Eigen::Index r = 0; r < x.size(); ++r)
        g[r] = w[r] * std::pow(lambda[r] / x[r], -alpha);
    return g;
}

double utility_value(const Vec& x, const Vec& w, double alpha, const Vec& lambda) {
    double v = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r) {
        double y = lambda[r] / x[r];
        v += alpha == 1.0 ? x[r] * w[r] * std::log(y)
                          : x[r] * w[r] * (std::pow(y, 1.0 - alpha) / (1.0 - alpha));
    }
    return v;
}

// Solves max sum_r x_r U_r(lambda_r/x_r) over {lambda > 0 : A lambda < c} for
// strictly positive x by following the log-barrier central path. At barrier
// parameter t the multipliers are p_l = t / slack_l, so complementary slackness
// holds with residual exactly t; the path ends at t below kKktTol.
struct BarrierSolver {
    const CapacityRegion& region;
    const Vec& x;
    const Vec& w;
    double alpha;

    Vec lambda;
    Vec slack;

    double barrier_objective(double t, const Vec& lam, const Vec& s) const {
        return -utility_value(x, w, alpha, lam) - t * s.array().log().sum();
    }

    // Newton descent on the barrier objective at fixed t. Convergence is
    // measured per class against the stationarity scale max(1, x_r).
    void center(double t, double tol_factor) {
        const Mat& A = region.usage();
        for (int iter = 0; iter < 200; ++iter) {
            Vec inv_s = slack.cwiseInverse();
            Vec grad = -utility_gradient(x, w, alpha, lambda) + t * (A.transpose() * inv_s);

            double worst = 0.0;
            for (Eigen::Index r = 0; r < x.size(); ++r)
                worst = std::max(worst, std::abs(grad[r]) / std::max(1.0, x[r]));
            if (worst <= tol_factor) return;

            Vec diag(x.size());
            for (Eigen::Index r = 0; r < x.size(); ++r)
                diag[r] = alpha * w[r] * std::pow(lambda[r] / x[r], -alpha) / lambda[r];
            Mat hess = diag.asDiagonal();
            Vec inv_s2 = inv_s.cwiseProduct(inv_s);
            hess.noalias() += t * A.transpose() * inv_s2.asDiagonal() * A;

            Vec step = hess.ldlt().solve(-grad);
            if (!step.allFinite()) step = -grad;

            double f0 = barrier_objective(t, lambda, slack);
            double slope = grad.dot(step);
            double size = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                Vec cand = lambda + size * step;
                if (cand.minCoeff() > 0.0) {
                    Vec s = region.capacity() - A * cand;
                    if (s.minCoeff() > 0.0 &&
                        barrier_objective(t, cand, s) <= f0 + 1e-4 * size * slope) {
                        lambda = cand;
                        slack = s;
                        moved = true;
                        break;
                    }
                }
                size *= 0.5;
            }
            if (!moved) return;  // at numerical floor for this t
        }
    }

    AllocationResult solve() {
        const Mat& A = region.usage();
        // Feasible start: scaled proportional split, half way to the boundary.
        Vec load = A * x;
        double ratio = 0.0;
        for (Eigen::Index l = 0; l < load.size(); ++l)
            ratio = std::max(ratio, load[l] / region.capacity()[l]);
        lambda = x * (0.5 / ratio);
        slack = region.capacity() - A * lambda;

        double scale = 1.0;
        for (Eigen::Index r = 0; r < x.size(); ++r) scale = std::max(scale, w[r] * x[r]);
        const double t_end = 1e-10;
        for (double t = scale; t > t_end; t *= 0.1) center(t, 1e-8);
        center(t_end, 1e-11);

        AllocationResult res;
        res.lambda = lambda;
        res.gamma = lambda.array().log();
        res.prices = t_end * slack.cwiseInverse();
        res.objective = x.dot(res.gamma);

        Vec stat = utility_gradient(x, w, alpha, lambda) - A.transpose() * res.prices;
        double residual = 0.0;
        for (Eigen::Index r = 0; r < x.size(); ++r)
            residual = std::max(residual, std::abs(stat[r]) / std::max(1.0, x[r]));
        residual = std::max(residual, t_end);                    // complementary slackness
        residual = std::max(residual, -region.min_slack(lambda));  // primal feasibility
        res.kkt_residual = residual;
        if (!(residual <= kKktTol))
            throw NumericalError("allocation solver failed to certify KKT conditions (residual " +
                                 format_double(residual) + ")");
        return res;
    }
};

AllocationResult zero_allocation(int num_classes, int num_links) {
    AllocationResult res;
    res.lambda = Vec::Zero(num_classes);
    res.gamma = Vec::Constant(num_classes, kNegInf);
    res.prices = Vec::Zero(num_links);
    res.kkt_residual = 0.0;
    res.objective = 0.0;
    return res;
}

}  // namespace

AllocationResult alpha_fair_allocate(const CapacityRegion& region, const Vec& x,
                                     const Vec& w, double alpha) {
    if (x.size() != region.num_classes())
        throw ValidationError("allocate: population vector has wrong dimension");
    if (w.size() != region.num_classes())
        throw ValidationError("allocate: weight vector has wrong dimension");
    if (!(alpha > 0.0)) throw ValidationError("allocate: alpha must be positive");
    if (w.minCoeff() <= 0.0) throw ValidationError("allocate: weights must be positive");
    for (Eigen::Index r = 0; r < x.size(); ++r)
        if (x[r] < 0.0 || !std::isfinite(x[r]))
            throw ValidationError("allocate: populations must be nonnegative and finite");

    Face face = support_face(x);
    if (face.support.empty()) return zero_allocation(region.num_classes(), region.num_links());

    AllocationResult res = zero_allocation(region.num_classes(), region.num_links());
    if (face.zero_set.empty()) {
        BarrierSolver solver{region, x, w, alpha, {}, {}};
        return solver.solve();
    }

    CapacityRegion sub = face_restrict(region, face);
    Vec xs(static_cast<Eigen::Index>(face.support.size()));
    Vec ws(static_cast<Eigen::Index>(face.support.size()));
    for (std::size_t j = 0; j < face.support.size(); ++j) {
        xs[static_cast<Eigen::Index>(j)] = x[face.support[j]];
        ws[static_cast<Eigen::Index>(j)] = w[face.support[j]];
    }
    BarrierSolver solver{sub, xs, ws, alpha, {}, {}};
    AllocationResult inner = solver.solve();

    for (std::size_t j = 0; j < face.support.size(); ++j) {
        res.lambda[face.support[j]] = inner.lambda[static_cast<Eigen::Index>(j)];
        res.gamma[face.support[j]] = inner.gamma[static_cast<Eigen::Index>(j)];
    }
    // Links dropped by the restriction constrain no supported class; price 0.
    std::size_t kept = 0;
    for (int l = 0; l < region.num_links(); ++l) {
        bool used = false;
        for (int r : face.support) used = used || region.usage()(l, r) > 0.0;
        if (used) res.prices[l] = inner.prices[static_cast<Eigen::Index>(kept++)];
    }
    res.objective = inner.objective;
    res.kkt_residual = inner.kkt_residual;
    return res;
}

AllocationResult pf_allocate(const CapacityRegion& region, const Vec& x) {
    return alpha_fair_allocate(region, x, Vec::Ones(region.num_classes()), 1.0);
}

double legendre(const CapacityRegion& region, const Vec& x) {
    return pf_allocate(region, x).objective;
}

Vec pf_gradient(const CapacityRegion& region, const Vec& x) {
    if (x.size() != region.num_classes())
        throw ValidationError("pf_gradient: population vector has wrong dimension");
    if (x.minCoeff() <= 0.0)
        throw ValidationError("pf_gradient: requires strictly positive populations");
    return pf_allocate(region, x).gamma;
}

double LegendreCache::value(const State& x) {
    auto it = values_.find(x);
    if (it != values_.end()) return it->second;
    double v = legendre(*region_, to_vec(x));
    values_.emplace(x, v);
    return v;
}

}  // namespace fairshare
