#ifndef FAIRSHARE_RNG_HPP
#define FAIRSHARE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace fairshare {

// Counter-based generator built on the splitmix64 finalizer. Each draw hashes
// (key, counter), so streams derived via split() are independent of the parent
// stream's position and runs are reproducible from the seed alone.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))), counter_(0) {}

    std::uint64_t next_u64() {
        return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull);
    }

    // Child generator identified by index; insensitive to this stream's position.
    CounterRng split(std::uint64_t index) const {
        CounterRng child(0);
        child.key_ = mix(key_ ^ mix(index * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull));
        child.counter_ = 0;
        return child;
    }

    // Uniform on (0, 1]; never returns 0 so log() is always finite.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace fairshare

#endif
