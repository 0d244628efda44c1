#ifndef FAIRSHARE_COMMON_HPP
#define FAIRSHARE_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairshare {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Integer population vector (number of users per class).
using State = std::vector<int>;

// Raised when inputs violate a documented precondition or schema.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an iterative method fails to certify its result.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a requested computation exceeds a configured budget.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Absolute slack tolerance on each link constraint.
inline constexpr double kFeasTol = 1e-9;
// Tolerance for KKT certificates returned by the allocation solvers.
inline constexpr double kKktTol = 1e-9;
// Margin required when certifying a routing matrix spectral radius below 1.
inline constexpr double kSpectralMargin = 1e-9;
// Population threshold below which a coordinate is treated as being on a face.
inline constexpr double kFaceTol = 1e-9;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

inline Vec to_vec(const State& x) {
    Vec v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
    return v;
}

inline State to_state(const Vec& v) {
    State x(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double r = std::round(v[i]);
        x[static_cast<std::size_t>(i)] = static_cast<int>(r);
    }
    return x;
}

// log(sum exp(v_i)) with max-shift; returns -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& values);

/// Lattice box [0, bound]^dims with row-major linear indexing.
class Box {
public:
    Box(int dims, int bound);

    int dims() const { return dims_; }
    int bound() const { return bound_; }
    std::size_t size() const { return size_; }

    bool contains(const State& x) const;
    std::size_t index(const State& x) const;
    State state(std::size_t index) const;

    bool operator==(const Box& other) const {
        return dims_ == other.dims_ && bound_ == other.bound_;
    }

private:
    int dims_;
    int bound_;
    std::size_t size_;
};

// Visits the box states level by level (constant coordinate sum), lexicographic
// within each level. fn receives (linear_index, state).
template <typename Fn>
void for_each_level_ordered(const Box& box, Fn&& fn) {
    const int max_level = box.dims() * box.bound();
    std::vector<State> states;
    states.reserve(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) states.push_back(box.state(i));
    for (int level = 0; level <= max_level; ++level) {
        for (std::size_t i = 0; i < states.size(); ++i) {
            int sum = 0;
            for (int c : states[i]) sum += c;
            if (sum == level) fn(i, states[i]);
        }
    }
}

std::string format_double(double v, int significant_digits = 9);
std::string format_double_raw(double v);

}  // namespace fairshare

#endif
