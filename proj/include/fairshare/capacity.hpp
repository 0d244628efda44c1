#ifndef FAIRSHARE_CAPACITY_HPP
#define FAIRSHARE_CAPACITY_HPP

#include "fairshare/common.hpp"

namespace fairshare {

/// Polyhedral capacity region C = {lambda >= 0 : A lambda <= c}.
///
/// Rows of A are links, columns are traffic classes; A_{lr} is the amount of
/// link-l capacity consumed per unit of class-r rate. Immutable after
/// construction and safe to share across threads.
class CapacityRegion {
public:
    CapacityRegion(Mat usage, Vec capacity);

    int num_classes() const { return static_cast<int>(usage_.cols()); }
    int num_links() const { return static_cast<int>(usage_.rows()); }
    const Mat& usage() const { return usage_; }
    const Vec& capacity() const { return capacity_; }

    /// Membership with absolute slack tolerance kFeasTol per link.
    bool contains(const Vec& rates) const;

    /// Strict interior test: A rho < c with margin exceeding kFeasTol.
    bool in_interior(const Vec& rho) const;

    /// Most negative slack over links (and coordinate negativity); >= 0 means
    /// feasible exactly, >= -kFeasTol means feasible within tolerance.
    double min_slack(const Vec& rates) const;

    /// Largest feasible rate for class r alone: min over links of c_l / A_{lr}.
    double max_class_rate(int r) const;

private:
    Mat usage_;
    Vec capacity_;
};

/// Partition of the class set into a zero set and its support.
struct Face {
    std::vector<int> zero_set;
    std::vector<int> support;

    static Face from_zero_set(std::vector<int> zero_set, int num_classes);
};

/// Face of the nonnegative orthant that x lies on (zero set = {r : x_r <= 0}).
Face support_face(const Vec& x);

/// Region over the face's support classes only. Columns of A are restricted
/// and links whose restricted row vanishes are dropped.
CapacityRegion face_restrict(const CapacityRegion& region, const Face& face);

}  // namespace fairshare

#endif
