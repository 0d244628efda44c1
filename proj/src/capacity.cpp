#include "fairshare/capacity.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

CapacityRegion::CapacityRegion(Mat usage, Vec capacity)
    : usage_(std::move(usage)), capacity_(std::move(capacity)) {
    if (usage_.rows() == 0 || usage_.cols() == 0)
        throw ValidationError("capacity: A must have at least one link and one class");
    if (capacity_.size() != usage_.rows())
        throw ValidationError("capacity: c length must match the number of links");
    for (Eigen::Index l = 0; l < capacity_.size(); ++l) {
        if (!(capacity_[l] > 0.0) || !std::isfinite(capacity_[l]))
            throw ValidationError("capacity: every link capacity must be positive and finite");
    }
    for (Eigen::Index l = 0; l < usage_.rows(); ++l) {
        bool any = false;
        for (Eigen::Index r = 0; r < usage_.cols(); ++r) {
            double a = usage_(l, r);
            if (a < 0.0 || !std::isfinite(a))
                throw ValidationError("capacity: A entries must be nonnegative and finite");
            any = any || a > 0.0;
        }
        if (!any) throw ValidationError("capacity: link " + std::to_string(l) + " constrains no class");
    }
    for (Eigen::Index r = 0; r < usage_.cols(); ++r) {
        if (usage_.col(r).maxCoeff() <= 0.0)
            throw ValidationError("capacity: class " + std::to_string(r) + " uses no link, region unbounded");
    }
}

double CapacityRegion::min_slack(const Vec& rates) const {
    if (rates.size() != usage_.cols())
        throw ValidationError("capacity: rate vector has wrong dimension");
    double slack = (capacity_ - usage_ * rates).minCoeff();
    double coord = rates.minCoeff();
    return std::min(slack, coord);
}

bool CapacityRegion::contains(const Vec& rates) const {
    return min_slack(rates) >= -kFeasTol;
}

bool CapacityRegion::in_interior(const Vec& rho) const {
    if (rho.size() != usage_.cols())
        throw ValidationError("capacity: rate vector has wrong dimension");
    if (rho.minCoeff() < 0.0) return false;
    return (capacity_ - usage_ * rho).minCoeff() > kFeasTol;
}

double CapacityRegion::max_class_rate(int r) const {
    double best = kPosInf;
    for (Eigen::Index l = 0; l < usage_.rows(); ++l) {
        double a = usage_(l, r);
        if (a > 0.0) best = std::min(best, capacity_[l] / a);
    }
    return best;
}

Face Face::from_zero_set(std::vector<int> zero_set, int num_classes) {
    std::sort(zero_set.begin(), zero_set.end());
    Face face;
    face.zero_set = std::move(zero_set);
    std::size_t k = 0;
    for (int r = 0; r < num_classes; ++r) {
        if (k < face.zero_set.size() && face.zero_set[k] == r) {
            ++k;
        } else {
            face.support.push_back(r);
        }
    }
    if (k != face.zero_set.size())
        throw ValidationError("face: zero set contains indices outside the class range");
    return face;
}

Face support_face(const Vec& x) {
    std::vector<int> zero;
    for (Eigen::Index r = 0; r < x.size(); ++r)
        if (x[r] <= 0.0) zero.push_back(static_cast<int>(r));
    return Face::from_zero_set(std::move(zero), static_cast<int>(x.size()));
}

CapacityRegion face_restrict(const CapacityRegion& region, const Face& face) {
    if (face.support.empty()) throw ValidationError("face_restrict: empty support");
    if (face.zero_set.empty()) return region;

    const Mat& A = region.usage();
    Mat cols(A.rows(), static_cast<Eigen::Index>(face.support.size()));
    for (std::size_t j = 0; j < face.support.size(); ++j)
        cols.col(static_cast<Eigen::Index>(j)) = A.col(face.support[j]);

    std::vector<int> keep_links;
    for (Eigen::Index l = 0; l < cols.rows(); ++l)
        if (cols.row(l).maxCoeff() > 0.0) keep_links.push_back(static_cast<int>(l));

    Mat restricted(static_cast<Eigen::Index>(keep_links.size()), cols.cols());
    Vec cap(static_cast<Eigen::Index>(keep_links.size()));
    for (std::size_t i = 0; i < keep_links.size(); ++i) {
        restricted.row(static_cast<Eigen::Index>(i)) = cols.row(keep_links[i]);
        cap[static_cast<Eigen::Index>(i)] = region.capacity()[keep_links[i]];
    }
    return CapacityRegion(std::move(restricted), std::move(cap));
}

}  // namespace fairshare
