#ifndef FAIRSHARE_VERIFY_HPP
#define FAIRSHARE_VERIFY_HPP

#include "fairshare/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fairshare {

struct CheckResult {
    std::string id;
    std::string instance;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool skipped = false;
    bool diagnostic = false;  // recorded, never gates the overall status
    double runtime_ms = 0.0;
};

struct VerificationReport {
    std::string status;  // pass | fail | incomplete
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
};

/// Built-in verification scenarios: single-link networks, the two-link
/// three-class network, a three-link line network, random regions, a routing
/// tandem and phase-type variants.
std::vector<Scenario> builtin_scenarios(std::uint64_t seed);

/// The acceptance suite: every criterion at its stated scale and tolerance,
/// one result per criterion, deterministic in the seed.
std::vector<CheckResult> run_acceptance(std::uint64_t seed);

/// Full battery: module property checks on the built-in scenarios, a reduced
/// battery on any user scenarios, then the acceptance suite. At most `budget`
/// checks are executed (negative = unlimited); the rest are reported skipped.
VerificationReport run_all(const std::vector<Scenario>& user_scenarios, std::uint64_t seed,
                           long budget);

std::string report_to_json(const VerificationReport& report);

}  // namespace fairshare

#endif
