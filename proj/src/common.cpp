#include "fairshare/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace fairshare {

double log_sum_exp(const std::vector<double>& values) {
    double m = kNegInf;
    for (double v : values) m = std::max(m, v);
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - m);
    return m + std::log(acc);
}

Box::Box(int dims, int bound) : dims_(dims), bound_(bound) {
    if (dims <= 0) throw ValidationError("Box: dims must be positive");
    if (bound < 0) throw ValidationError("Box: bound must be nonnegative");
    size_ = 1;
    for (int i = 0; i < dims; ++i) {
        std::size_t next = size_ * static_cast<std::size_t>(bound + 1);
        if (next / static_cast<std::size_t>(bound + 1) != size_)
            throw ResourceError("Box: state count overflows size_t");
        size_ = next;
    }
}

bool Box::contains(const State& x) const {
    if (static_cast<int>(x.size()) != dims_) return false;
    for (int c : x)
        if (c < 0 || c > bound_) return false;
    return true;
}

std::size_t Box::index(const State& x) const {
    std::size_t idx = 0;
    for (int i = 0; i < dims_; ++i)
        idx = idx * static_cast<std::size_t>(bound_ + 1) + static_cast<std::size_t>(x[static_cast<std::size_t>(i)]);
    return idx;
}

State Box::state(std::size_t index) const {
    State x(static_cast<std::size_t>(dims_));
    for (int i = dims_ - 1; i >= 0; --i) {
        x[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(bound_ + 1));
        index /= static_cast<std::size_t>(bound_ + 1);
    }
    return x;
}

std::string format_double(double v, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
    return buf;
}

std::string format_double_raw(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return format_double(v, 17);
    return std::string(buf, ptr);
}

}  // namespace fairshare
