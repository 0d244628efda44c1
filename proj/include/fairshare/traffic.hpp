#ifndef FAIRSHARE_TRAFFIC_HPP
#define FAIRSHARE_TRAFFIC_HPP

#include "fairshare/capacity.hpp"
#include "fairshare/common.hpp"

namespace fairshare {

struct SpectralCheck {
    bool certified = false;  // spectral radius below 1 - kSpectralMargin
    double radius = 0.0;     // certified upper bound on the Perron root
};

/// Certified Perron-root bound for an entrywise nonnegative substochastic
/// matrix, via power iteration on (P + I)/2 and the Collatz-Wielandt quotient.
SpectralCheck check_spectral_radius(const Mat& routing);

/// Effective arrival rates: the unique solution of (I - P^T) nu = nu_bar.
Vec solve_traffic(const Vec& nu_bar, const Mat& routing);

/// Open network of user classes with Poisson external arrivals, exponential
/// service and Markovian routing between classes.
class TrafficModel {
public:
    TrafficModel(Vec nu_bar, Vec mu, Mat routing);

    int num_classes() const { return static_cast<int>(nu_bar_.size()); }
    const Vec& nu_bar() const { return nu_bar_; }
    const Vec& mu() const { return mu_; }
    const Mat& routing() const { return routing_; }
    const Vec& nu() const { return nu_; }
    const Vec& rho() const { return rho_; }
    bool has_routing() const { return routing_.cwiseAbs().maxCoeff() > 0.0; }

private:
    Vec nu_bar_;
    Vec mu_;
    Mat routing_;
    Vec nu_;
    Vec rho_;
};

/// Arrival rates and routing matrix of the chain watched on the complement of
/// the class subset `zero_set`, with excursions through the subset removed.
struct ReducedRouting {
    std::vector<int> kept;  // class indices of the complement, ascending
    Vec nu_tilde;
    Mat routing_tilde;
};

ReducedRouting remove_excursions(const TrafficModel& model, const std::vector<int>& zero_set);

/// F_r(u) = sum_s [(I - P)^{-1}]_{rs} (e^{u_s} - 1)(u_s - (P u)_s) for all r
/// at once, computed by a linear solve. Nonnegative for any certified
/// substochastic P; zero only when u vanishes on the classes reachable from r.
Vec drift_functional_all(const Mat& routing, const Vec& u);
double drift_functional(const Mat& routing, const Vec& u, int r);

/// Same functional with e^u - 1 replaced by an arbitrary increasing function
/// vanishing at zero (used by the tanh variant of the nonnegativity check).
Vec drift_functional_all_with(const Mat& routing, const Vec& u, double (*increment)(double));

/// Phase-type service description: per class, an initial phase distribution,
/// exponential phase rates and a substochastic phase routing matrix.
struct PhaseTypeSpec {
    struct ClassPhases {
        Vec alpha;
        Vec rates;
        Mat routing;
        int num_phases() const { return static_cast<int>(rates.size()); }
    };
    std::vector<ClassPhases> classes;

    void validate() const;
    /// Mean total service time of one class-r user: alpha^T (I - P_r)^{-1} (1/rates).
    double mean_service(int r) const;
};

/// Markov model on (class, phase) pairs equivalent to phase-type service.
/// Capacity columns are replicated across the phases of a class so that the
/// expanded region constrains per-class rate totals.
struct ExpandedModel {
    CapacityRegion region;
    TrafficModel model;
    std::vector<int> owner;  // expanded class -> base class
    Vec sigma;               // per base class mean service time
};

ExpandedModel expand_phase_type(const CapacityRegion& region, const TrafficModel& model,
                                const PhaseTypeSpec& spec);

}  // namespace fairshare

#endif
