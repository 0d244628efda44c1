#ifndef FAIRSHARE_SCENARIO_HPP
#define FAIRSHARE_SCENARIO_HPP

#include "fairshare/allocators.hpp"
#include "fairshare/capacity.hpp"
#include "fairshare/traffic.hpp"

#include <optional>
#include <string>

namespace fairshare {

struct AllocatorSpec {
    AllocatorKind kind = AllocatorKind::kPf;
    Vec weights;         // alpha_fair only
    double alpha = 1.0;  // alpha_fair only
};

struct RunConfig {
    std::optional<double> t_end;
    std::optional<std::uint64_t> seed;
    std::optional<int> box;
    std::optional<double> burn_in;
    std::optional<double> h_step;
    std::optional<double> scale;
};

/// Parsed and fully validated scenario file. Construction invariants of the
/// embedded objects are enforced during parsing; unknown keys are rejected.
struct Scenario {
    std::string name;
    CapacityRegion region;
    TrafficModel traffic;
    std::optional<PhaseTypeSpec> phase_type;
    AllocatorSpec allocator;
    RunConfig run;
};

Scenario parse_scenario_text(const std::string& text, const std::string& name);
Scenario parse_scenario(const std::string& path);

}  // namespace fairshare

#endif
