#ifndef FAIRSHARE_DYNAMICS_HPP
#define FAIRSHARE_DYNAMICS_HPP

#include "fairshare/allocators.hpp"
#include "fairshare/common.hpp"
#include "fairshare/stationary.hpp"
#include "fairshare/traffic.hpp"

#include <cstdint>

namespace fairshare {

enum class EventKind { kArrival, kRouting, kDeparture };

/// One transition of the population chain. Arrivals carry from = -1, departures
/// carry to = -1, routing moves carry both class indices.
struct Event {
    double time;
    EventKind kind;
    int from;
    int to;
};

/// Event log of one continuous-time run. The piecewise-constant state path is
/// reconstructed from the initial state and the log; replay() visits it.
struct SimulationRun {
    State initial_state;
    State final_state;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    int record_bound = 30;
    std::vector<Event> events;

    /// Visits (state, dwell_start, dwell_end) for every constant segment.
    template <typename Fn>
    void replay(Fn&& fn) const {
        State x = initial_state;
        double prev = 0.0;
        for (const Event& e : events) {
            fn(static_cast<const State&>(x), prev, e.time);
            if (e.kind != EventKind::kDeparture) x[static_cast<std::size_t>(e.to)] += 1;
            if (e.kind != EventKind::kArrival) x[static_cast<std::size_t>(e.from)] -= 1;
            prev = e.time;
        }
        fn(static_cast<const State&>(x), prev, horizon);
    }
};

struct SimulateOptions {
    double t_end = 0.0;
    std::uint64_t seed = 1;
    int record_bound = 30;            // occupancy recording box [0, bound]^R
    std::size_t max_events = 200'000'000;
    std::size_t memo_capacity = std::size_t{1} << 20;
};

/// Exact competing-exponentials simulation of the population process: external
/// arrivals at rate nu_bar_r, per-class completion at rate mu_r lambda_r(x),
/// completions rerouted with the model's routing probabilities. Allocations
/// are memoized per visited state. Deterministic in (inputs, seed).
SimulationRun simulate(const TrafficModel& model, const Allocator& allocator, const State& x0,
                       const SimulateOptions& options);

/// Exponential clock rates the simulator races at state x: per-class arrival
/// rates and per-class service completion rates.
struct TransitionRates {
    Vec arrival;
    Vec completion;
};
TransitionRates transition_rates(const TrafficModel& model, const Allocator& allocator,
                                 const State& x);

/// Time-weighted occupancy over the recording box after the burn-in, box mass
/// normalized to one; time spent outside the box is reported as leakage.
StateDistribution empirical_distribution(const SimulationRun& run, double burn_in);

/// Empirical distribution of per-class totals for runs over expanded phase
/// classes: phases are aggregated through `owner` before recording.
StateDistribution aggregated_distribution(const SimulationRun& run, double burn_in,
                                          const std::vector<int>& owner, int num_base_classes);

/// Rescaled sample path z^{-1} X(z t) on a uniform grid over [0, t_end].
struct ScaledPath {
    double scale = 1.0;
    double grid_step = 0.0;
    std::vector<double> times;
    std::vector<Vec> states;
};

ScaledPath scaled_path(const TrafficModel& model, const Allocator& allocator, double scale,
                       const Vec& x0_direction, double t_end, std::uint64_t seed);

}  // namespace fairshare

#endif
