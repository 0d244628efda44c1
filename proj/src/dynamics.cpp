#include "fairshare/dynamics.hpp"

#include "fairshare/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace fairshare {

namespace {

struct StateHash {
    std::size_t operator()(const State& s) const {
        std::size_t h = 0x9e3779b97f4a7c15ull;
        for (int v : s) h = (h ^ static_cast<std::size_t>(v)) * 0xbf58476d1ce4e5b9ull;
        return h;
    }
};

std::string describe_state(const State& x) {
    std::ostringstream oss;
    oss << "(";
    for (std::size_t i = 0; i < x.size(); ++i) oss << (i ? "," : "") << x[i];
    oss << ")";
    return oss.str();
}

}  // namespace

SimulationRun simulate(const TrafficModel& model, const Allocator& allocator, const State& x0,
                       const SimulateOptions& options) {
    const int R = model.num_classes();
    if (allocator.num_classes() != R)
        throw ValidationError("simulate: allocator and model class counts disagree");
    if (static_cast<int>(x0.size()) != R)
        throw ValidationError("simulate: initial state has wrong dimension");
    if (!(options.t_end > 0.0)) throw ValidationError("simulate: t_end must be positive");
    for (int v : x0)
        if (v < 0) throw ValidationError("simulate: initial populations must be nonnegative");

    SimulationRun run;
    run.initial_state = x0;
    run.horizon = options.t_end;
    run.seed = options.seed;
    run.record_bound = options.record_bound;

    std::unordered_map<State, Vec, StateHash> memo;
    auto rates_at = [&](const State& x) -> const Vec& {
        auto it = memo.find(x);
        if (it != memo.end()) return it->second;
        if (memo.size() >= options.memo_capacity) memo.clear();
        Vec lambda;
        try {
            lambda = allocator.rates(x);
        } catch (const std::exception& e) {
            throw NumericalError("simulate: allocator failed at state " + describe_state(x) +
                                 ": " + e.what());
        }
        return memo.emplace(x, std::move(lambda)).first->second;
    };

    CounterRng rng(options.seed, 0x73696dull);
    State x = x0;
    double t = 0.0;
    std::vector<double> weights(static_cast<std::size_t>(2 * R));

    while (true) {
        const Vec& lambda = rates_at(x);
        double total = 0.0;
        for (int r = 0; r < R; ++r) {
            double a = model.nu_bar()[r];
            double s = x[static_cast<std::size_t>(r)] > 0 ? model.mu()[r] * lambda[r] : 0.0;
            weights[static_cast<std::size_t>(r)] = a;
            weights[static_cast<std::size_t>(R + r)] = s;
            total += a + s;
        }
        if (total <= 0.0) break;  // absorbing state, e.g. empty system with no arrivals

        t += rng.exponential(total);
        if (t >= options.t_end) break;
        if (run.events.size() >= options.max_events)
            throw ResourceError("simulate: event budget exhausted before t_end");

        double pick = rng.uniform01() * total;
        int chosen = 2 * R - 1;
        double acc = 0.0;
        for (int i = 0; i < 2 * R; ++i) {
            acc += weights[static_cast<std::size_t>(i)];
            if (pick <= acc) {
                chosen = i;
                break;
            }
        }

        if (chosen < R) {
            run.events.push_back({t, EventKind::kArrival, -1, chosen});
            x[static_cast<std::size_t>(chosen)] += 1;
        } else {
            int r = chosen - R;
            // Route the completed user: class s with probability p_rs, exit
            // with the residual probability.
            double u = rng.uniform01();
            double cum = 0.0;
            int dest = -1;
            for (int s = 0; s < R; ++s) {
                cum += model.routing()(r, s);
                if (u <= cum) {
                    dest = s;
                    break;
                }
            }
            if (dest >= 0) {
                run.events.push_back({t, EventKind::kRouting, r, dest});
                x[static_cast<std::size_t>(r)] -= 1;
                x[static_cast<std::size_t>(dest)] += 1;
            } else {
                run.events.push_back({t, EventKind::kDeparture, r, -1});
                x[static_cast<std::size_t>(r)] -= 1;
            }
        }
    }

    run.final_state = x;
    return run;
}

namespace {

StateDistribution occupancy(const SimulationRun& run, double burn_in, int dims,
                            const std::vector<int>* owner) {
    if (!(burn_in < run.horizon))
        throw ValidationError("empirical distribution: burn-in must precede the horizon");
    Box box(dims, run.record_bound);
    std::vector<double> weight(box.size(), 0.0);
    double outside = 0.0;
    State mapped(static_cast<std::size_t>(dims));
    run.replay([&](const State& x, double t0, double t1) {
        double dwell = std::min(t1, run.horizon) - std::max(t0, burn_in);
        if (dwell <= 0.0) return;
        const State* probe = &x;
        if (owner != nullptr) {
            std::fill(mapped.begin(), mapped.end(), 0);
            for (std::size_t i = 0; i < x.size(); ++i)
                mapped[static_cast<std::size_t>((*owner)[i])] += x[i];
            probe = &mapped;
        }
        if (box.contains(*probe))
            weight[box.index(*probe)] += dwell;
        else
            outside += dwell;
    });

    double span = run.horizon - burn_in;
    double inside = span - outside;
    if (inside <= 0.0)
        throw NumericalError("empirical distribution: no mass inside the recording box");
    StateDistribution dist{box, {}, {}, 0.0, outside / span};
    dist.mass.resize(weight.size());
    dist.log_weight.resize(weight.size());
    for (std::size_t i = 0; i < weight.size(); ++i) {
        dist.mass[i] = weight[i] / inside;
        dist.log_weight[i] = weight[i] > 0.0 ? std::log(weight[i]) : kNegInf;
    }
    dist.log_norm = std::log(inside);
    return dist;
}

}  // namespace

StateDistribution empirical_distribution(const SimulationRun& run, double burn_in) {
    return occupancy(run, burn_in, static_cast<int>(run.initial_state.size()), nullptr);
}

TransitionRates transition_rates(const TrafficModel& model, const Allocator& allocator,
                                 const State& x) {
    const int R = model.num_classes();
    Vec lambda = allocator.rates(x);
    TransitionRates rates{model.nu_bar(), Vec::Zero(R)};
    for (int r = 0; r < R; ++r)
        if (x[static_cast<std::size_t>(r)] > 0) rates.completion[r] = model.mu()[r] * lambda[r];
    return rates;
}

StateDistribution aggregated_distribution(const SimulationRun& run, double burn_in,
                                          const std::vector<int>& owner, int num_base_classes) {
    if (owner.size() != run.initial_state.size())
        throw ValidationError("aggregated distribution: owner map has wrong dimension");
    return occupancy(run, burn_in, num_base_classes, &owner);
}

ScaledPath scaled_path(const TrafficModel& model, const Allocator& allocator, double scale,
                       const Vec& x0_direction, double t_end, std::uint64_t seed) {
    if (scale < 1.0) throw ValidationError("scaled_path: scale must be at least 1");
    State x0(static_cast<std::size_t>(x0_direction.size()));
    for (Eigen::Index r = 0; r < x0_direction.size(); ++r)
        x0[static_cast<std::size_t>(r)] = static_cast<int>(std::llround(scale * x0_direction[r]));

    SimulateOptions options;
    options.t_end = scale * t_end;
    options.seed = seed;
    SimulationRun run = simulate(model, allocator, x0, options);

    ScaledPath path;
    path.scale = scale;
    path.grid_step = t_end / 1000.0;
    path.times.reserve(1001);
    path.states.reserve(1001);
    for (int k = 0; k <= 1000; ++k) path.times.push_back(k * path.grid_step);

    std::size_t next = 0;
    run.replay([&](const State& x, double t0, double t1) {
        while (next < path.times.size() && path.times[next] * scale >= t0 &&
               path.times[next] * scale < t1) {
            path.states.push_back(to_vec(x) / scale);
            ++next;
        }
    });
    // The grid point at exactly t_end falls on the final segment's right edge.
    while (path.states.size() < path.times.size()) {
        path.states.push_back(to_vec(run.final_state) / scale);
    }
    return path;
}

}  // namespace fairshare
