#include "fairshare/traffic.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

namespace {

void validate_routing(const Mat& P) {
    if (P.rows() != P.cols()) throw ValidationError("routing: matrix must be square");
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        double row_sum = 0.0;
        for (Eigen::Index s = 0; s < P.cols(); ++s) {
            if (P(r, s) < 0.0 || !std::isfinite(P(r, s)))
                throw ValidationError("routing: entries must be nonnegative and finite");
            row_sum += P(r, s);
        }
        if (row_sum > 1.0 + 1e-12)
            throw ValidationError("routing: row " + std::to_string(r) + " sums to " +
                                  format_double(row_sum) + " > 1");
    }
}

void require_certified(const Mat& P, const char* who) {
    SpectralCheck check = check_spectral_radius(P);
    if (!check.certified)
        throw NumericalError(std::string(who) + ": routing spectral radius " +
                             format_double(check.radius) + " not certified below 1");
}

}  // namespace

SpectralCheck check_spectral_radius(const Mat& routing) {
    validate_routing(routing);
    const Eigen::Index n = routing.rows();
    // Power iteration on M = (P + I)/2 keeps the iterate positive and makes
    // every diagonal block aperiodic; max_i (Mv)_i / v_i is an upper bound on
    // the Perron root of M for any positive v, so the certificate is sound
    // even before the iteration has fully converged.
    Mat M = 0.5 * (routing + Mat::Identity(n, n));
    Vec v = Vec::Ones(n);
    double bound = 1.0;
    for (int iter = 0; iter < 20000; ++iter) {
        Vec w = M * v;
        double quotient = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) quotient = std::max(quotient, w[i] / v[i]);
        v = w / w.maxCoeff();
        if (std::abs(quotient - bound) <= 1e-12 && iter > 2) {
            bound = quotient;
            break;
        }
        bound = quotient;
    }
    SpectralCheck check;
    check.radius = std::max(0.0, 2.0 * bound - 1.0);
    check.certified = check.radius < 1.0 - kSpectralMargin;
    return check;
}

Vec solve_traffic(const Vec& nu_bar, const Mat& routing) {
    if (nu_bar.size() != routing.rows())
        throw ValidationError("traffic: arrival vector has wrong dimension");
    require_certified(routing, "traffic");
    const Eigen::Index n = nu_bar.size();
    Mat lhs = Mat::Identity(n, n) - routing.transpose();
    return lhs.partialPivLu().solve(nu_bar);
}

TrafficModel::TrafficModel(Vec nu_bar, Vec mu, Mat routing)
    : nu_bar_(std::move(nu_bar)), mu_(std::move(mu)), routing_(std::move(routing)) {
    const Eigen::Index n = nu_bar_.size();
    if (n == 0) throw ValidationError("traffic: at least one class required");
    if (mu_.size() != n || routing_.rows() != n || routing_.cols() != n)
        throw ValidationError("traffic: nu_bar, mu and P dimensions disagree");
    for (Eigen::Index r = 0; r < n; ++r) {
        if (nu_bar_[r] < 0.0 || !std::isfinite(nu_bar_[r]))
            throw ValidationError("traffic: external arrival rates must be nonnegative");
        if (!(mu_[r] > 0.0) || !std::isfinite(mu_[r]))
            throw ValidationError("traffic: service rates must be positive");
    }
    nu_ = solve_traffic(nu_bar_, routing_);
    rho_ = nu_.cwiseQuotient(mu_);
}

ReducedRouting remove_excursions(const TrafficModel& model, const std::vector<int>& zero_set) {
    const int n = model.num_classes();
    std::vector<char> removed(static_cast<std::size_t>(n), 0);
    for (int r : zero_set) {
        if (r < 0 || r >= n) throw ValidationError("remove_excursions: class index out of range");
        removed[static_cast<std::size_t>(r)] = 1;
    }

    ReducedRouting out;
    for (int r = 0; r < n; ++r)
        if (!removed[static_cast<std::size_t>(r)]) out.kept.push_back(r);
    if (out.kept.empty())
        throw ValidationError("remove_excursions: the subset must leave at least one class");

    if (zero_set.empty()) {
        out.nu_tilde = model.nu_bar();
        out.routing_tilde = model.routing();
        return out;
    }

    std::vector<int> gone;
    for (int r = 0; r < n; ++r)
        if (removed[static_cast<std::size_t>(r)]) gone.push_back(r);

    const Mat Pt = model.routing().transpose();
    const auto pick = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Pt(rows[i], cols[j]);
        return m;
    };

    Mat inner = Mat::Identity(static_cast<Eigen::Index>(gone.size()),
                              static_cast<Eigen::Index>(gone.size())) -
                pick(gone, gone);
    Eigen::PartialPivLU<Mat> inner_lu(inner);

    Vec nu_bar_gone(static_cast<Eigen::Index>(gone.size()));
    for (std::size_t i = 0; i < gone.size(); ++i)
        nu_bar_gone[static_cast<Eigen::Index>(i)] = model.nu_bar()[gone[i]];
    Vec nu_bar_kept(static_cast<Eigen::Index>(out.kept.size()));
    for (std::size_t i = 0; i < out.kept.size(); ++i)
        nu_bar_kept[static_cast<Eigen::Index>(i)] = model.nu_bar()[out.kept[i]];

    Mat cross = pick(out.kept, gone);  // (P^T)_{kept,gone}
    out.nu_tilde = nu_bar_kept + cross * inner_lu.solve(nu_bar_gone);
    Mat reduced_t = pick(out.kept, out.kept) + cross * inner_lu.solve(pick(gone, out.kept));
    out.routing_tilde = reduced_t.transpose();
    require_certified(out.routing_tilde, "remove_excursions");
    return out;
}

Vec drift_functional_all_with(const Mat& routing, const Vec& u, double (*increment)(double)) {
    if (u.size() != routing.rows())
        throw ValidationError("drift functional: vector has wrong dimension");
    require_certified(routing, "drift functional");
    Vec gap = u - routing * u;
    Vec w(u.size());
    for (Eigen::Index s = 0; s < u.size(); ++s) w[s] = increment(u[s]) * gap[s];
    const Eigen::Index n = routing.rows();
    return (Mat::Identity(n, n) - routing).partialPivLu().solve(w);
}

Vec drift_functional_all(const Mat& routing, const Vec& u) {
    return drift_functional_all_with(routing, u, +[](double v) { return std::expm1(v); });
}

double drift_functional(const Mat& routing, const Vec& u, int r) {
    if (r < 0 || r >= routing.rows())
        throw ValidationError("drift functional: class index out of range");
    return drift_functional_all(routing, u)[r];
}

void PhaseTypeSpec::validate() const {
    if (classes.empty()) throw ValidationError("phase_type: at least one class required");
    for (std::size_t r = 0; r < classes.size(); ++r) {
        const ClassPhases& cp = classes[r];
        const Eigen::Index k = cp.rates.size();
        if (k == 0) throw ValidationError("phase_type: class " + std::to_string(r) + " has no phases");
        if (cp.alpha.size() != k || cp.routing.rows() != k || cp.routing.cols() != k)
            throw ValidationError("phase_type: class " + std::to_string(r) + " dimensions disagree");
        double total = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (cp.alpha[i] < 0.0) throw ValidationError("phase_type: alpha must be nonnegative");
            if (!(cp.rates[i] > 0.0)) throw ValidationError("phase_type: phase rates must be positive");
            total += cp.alpha[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ValidationError("phase_type: class " + std::to_string(r) +
                                  " initial distribution sums to " + format_double(total));
        SpectralCheck check = check_spectral_radius(cp.routing);
        if (!check.certified)
            throw NumericalError("phase_type: class " + std::to_string(r) +
                                 " phase routing not certified substochastic");
    }
}

double PhaseTypeSpec::mean_service(int r) const {
    const ClassPhases& cp = classes[static_cast<std::size_t>(r)];
    const Eigen::Index k = cp.rates.size();
    Vec inv_rates = cp.rates.cwiseInverse();
    // Expected number of visits per phase times the mean phase duration.
    Vec visits = (Mat::Identity(k, k) - cp.routing.transpose()).partialPivLu().solve(cp.alpha);
    return visits.dot(inv_rates);
}

ExpandedModel expand_phase_type(const CapacityRegion& region, const TrafficModel& model,
                                const PhaseTypeSpec& spec) {
    spec.validate();
    if (static_cast<int>(spec.classes.size()) != region.num_classes() ||
        model.num_classes() != region.num_classes())
        throw ValidationError("phase_type: class count must match the region and traffic model");
    if (model.has_routing())
        throw ValidationError(
            "phase_type: inter-class routing cannot be combined with phase-type service");

    int total = 0;
    for (const auto& cp : spec.classes) total += cp.num_phases();

    std::vector<int> owner;
    owner.reserve(static_cast<std::size_t>(total));
    Vec nu_bar(total), mu(total);
    Mat routing = Mat::Zero(total, total);
    Mat usage(region.num_links(), total);
    Vec sigma(region.num_classes());

    int base = 0;
    for (int r = 0; r < region.num_classes(); ++r) {
        const auto& cp = spec.classes[static_cast<std::size_t>(r)];
        const int k = cp.num_phases();
        for (int i = 0; i < k; ++i) {
            owner.push_back(r);
            nu_bar[base + i] = model.nu()[r] * cp.alpha[i];
            mu[base + i] = cp.rates[i];
            usage.col(base + i) = region.usage().col(r);
            for (int j = 0; j < k; ++j) routing(base + i, base + j) = cp.routing(i, j);
        }
        sigma[r] = spec.mean_service(r);
        base += k;
    }

    return ExpandedModel{CapacityRegion(std::move(usage), region.capacity()),
                         TrafficModel(std::move(nu_bar), std::move(mu), std::move(routing)),
                         std::move(owner), std::move(sigma)};
}

}  // namespace fairshare
