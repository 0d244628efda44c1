#include "fairshare/stationary.hpp"

#include "fairshare/pf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace fairshare {

namespace {

constexpr double kMassFloor = 1e-300;
constexpr std::size_t kDenseLimit = std::size_t{1} << 12;
constexpr std::size_t kStateBudget = std::size_t{1} << 16;

}  // namespace

StateDistribution normalize_log_weights(Box box, std::vector<double> log_weight) {
    if (log_weight.size() != box.size())
        throw ValidationError("distribution: weight count does not match the box");
    double log_norm = log_sum_exp(log_weight);
    if (!std::isfinite(log_norm))
        throw NumericalError("distribution: weights do not normalize");
    StateDistribution dist{box, {}, std::move(log_weight), log_norm, 0.0};
    dist.mass.resize(dist.log_weight.size());
    for (std::size_t i = 0; i < dist.mass.size(); ++i)
        dist.mass[i] = std::exp(dist.log_weight[i] - log_norm);
    return dist;
}

StateDistribution pf_prime_stationary(const LyapunovContext& ctx, int bound) {
    LegendreCache cache(ctx.region);
    return pf_prime_stationary(ctx, bound, cache);
}

StateDistribution pf_prime_stationary(const LyapunovContext& ctx, int bound, LegendreCache& cache) {
    const int R = ctx.region.num_classes();
    Box box(R, bound);
    std::vector<double> weights(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        State x = box.state(i);
        double linear = 0.0;
        bool dead = false;
        for (int r = 0; r < R; ++r) {
            if (x[static_cast<std::size_t>(r)] == 0) continue;
            if (ctx.rho[r] == 0.0) { dead = true; break; }
            linear += x[static_cast<std::size_t>(r)] * std::log(ctx.rho[r]);
        }
        weights[i] = dead ? kNegInf : -(cache.value(x) - linear);
    }
    return normalize_log_weights(box, std::move(weights));
}

StateDistribution bf_stationary(const BalanceTable& table, const LyapunovContext& ctx, int bound) {
    if (bound > table.bound())
        throw ValidationError("bf_stationary: requested box exceeds the balance table");
    const int R = table.box().dims();
    if (ctx.rho.size() != R) throw ValidationError("bf_stationary: load dimension mismatch");
    Box box(R, bound);
    std::vector<double> weights(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        State x = box.state(i);
        double linear = 0.0;
        bool dead = false;
        for (int r = 0; r < R; ++r) {
            if (x[static_cast<std::size_t>(r)] == 0) continue;
            if (ctx.rho[r] == 0.0) { dead = true; break; }
            linear += x[static_cast<std::size_t>(r)] * std::log(ctx.rho[r]);
        }
        weights[i] = dead ? kNegInf : -table.phi(x) + linear;
    }
    return normalize_log_weights(box, std::move(weights));
}

double detailed_balance_residual(const StateDistribution& dist, const Allocator& allocator,
                                 const TrafficModel& model) {
    if (model.has_routing())
        throw ValidationError("detailed balance: the one-step relation applies to P = 0 models");
    const Box& box = dist.box;
    if (model.num_classes() != box.dims())
        throw ValidationError("detailed balance: model dimension does not match the box");

    double worst = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
        State x = box.state(i);
        for (int r = 0; r < box.dims(); ++r) {
            if (x[static_cast<std::size_t>(r)] >= box.bound()) continue;
            State up = x;
            up[static_cast<std::size_t>(r)] += 1;
            double flow_down = dist.at(up) * model.mu()[r] * allocator.rates(up)[r];
            double flow_up = dist.at(x) * model.nu()[r];
            double denom = std::max(flow_up, kMassFloor);
            worst = std::max(worst, std::abs(flow_down - flow_up) / denom);
        }
    }
    return worst;
}

namespace {

struct Transition {
    std::size_t from;
    std::size_t to;
    double rate;
};

// Generator of the box-truncated chain; transitions leaving the box are
// suppressed (rate removed), which restricts reversible chains cleanly.
std::vector<Transition> build_generator(const Allocator& allocator, const TrafficModel& model,
                                        const Box& box) {
    const int R = box.dims();
    std::vector<Transition> transitions;
    for (std::size_t i = 0; i < box.size(); ++i) {
        State x = box.state(i);
        Vec lambda = allocator.rates(x);
        for (int r = 0; r < R; ++r) {
            if (model.nu_bar()[r] > 0.0 && x[static_cast<std::size_t>(r)] < box.bound()) {
                State up = x;
                up[static_cast<std::size_t>(r)] += 1;
                transitions.push_back({i, box.index(up), model.nu_bar()[r]});
            }
            if (x[static_cast<std::size_t>(r)] == 0) continue;
            double service = model.mu()[r] * lambda[r];
            if (service <= 0.0) continue;
            double routed = 0.0;
            for (int s = 0; s < R; ++s) {
                double p = model.routing()(r, s);
                routed += p;
                if (p <= 0.0) continue;
                State move = x;
                move[static_cast<std::size_t>(r)] -= 1;
                move[static_cast<std::size_t>(s)] += 1;
                if (move[static_cast<std::size_t>(s)] <= box.bound())
                    transitions.push_back({i, box.index(move), service * p});
            }
            if (routed < 1.0) {
                State down = x;
                down[static_cast<std::size_t>(r)] -= 1;
                transitions.push_back({i, box.index(down), service * (1.0 - routed)});
            }
        }
    }
    return transitions;
}

void require_irreducible(const std::vector<Transition>& transitions, std::size_t n) {
    std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
    for (const Transition& t : transitions) {
        if (t.rate <= 0.0 || t.from == t.to) continue;
        fwd[t.from].push_back(t.to);
        bwd[t.to].push_back(t.from);
    }
    auto reaches_all = [n](const std::vector<std::vector<std::size_t>>& adj) {
        std::vector<char> seen(n, 0);
        std::queue<std::size_t> queue;
        queue.push(0);
        seen[0] = 1;
        std::size_t count = 1;
        while (!queue.empty()) {
            std::size_t v = queue.front();
            queue.pop();
            for (std::size_t w : adj[v]) {
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    queue.push(w);
                }
            }
        }
        return count == n;
    };
    if (!reaches_all(fwd) || !reaches_all(bwd))
        throw NumericalError("truncated chain is reducible on this box; no unique stationary law");
}

}  // namespace

StateDistribution truncated_exact(const Allocator& allocator, const TrafficModel& model,
                                  int bound) {
    const int R = allocator.num_classes();
    if (model.num_classes() != R)
        throw ValidationError("truncated_exact: allocator and model class counts disagree");
    Box box(R, bound);
    if (box.size() > kStateBudget)
        throw ResourceError("truncated_exact: " + std::to_string(box.size()) +
                            " states exceed the 2^16 budget");

    std::vector<Transition> transitions = build_generator(allocator, model, box);
    require_irreducible(transitions, box.size());

    const std::size_t n = box.size();
    std::vector<double> pi(n);
    double rate_scale = 0.0;
    for (const Transition& t : transitions) rate_scale = std::max(rate_scale, t.rate);

    if (n <= kDenseLimit) {
        Mat m = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (const Transition& t : transitions) {
            m(static_cast<Eigen::Index>(t.to), static_cast<Eigen::Index>(t.from)) += t.rate;
            m(static_cast<Eigen::Index>(t.from), static_cast<Eigen::Index>(t.from)) -= t.rate;
        }
        Mat q_t = m;  // keep Q^T for the residual check
        m.row(0).setOnes();
        Vec rhs = Vec::Zero(static_cast<Eigen::Index>(n));
        rhs[0] = 1.0;
        Vec sol = m.partialPivLu().solve(rhs);
        double residual = (q_t * sol).cwiseAbs().maxCoeff() / std::max(1.0, rate_scale);
        if (!sol.allFinite() || sol.minCoeff() < -1e-12 || residual > 1e-10)
            throw NumericalError("truncated_exact: dense solve failed to certify (residual " +
                                 format_double(residual) + ")");
        for (std::size_t i = 0; i < n; ++i) pi[i] = std::max(0.0, sol[static_cast<Eigen::Index>(i)]);
    } else {
        std::vector<double> out_rate(n, 0.0);
        for (const Transition& t : transitions) out_rate[t.from] += t.rate;
        double uniform = 1.05 * *std::max_element(out_rate.begin(), out_rate.end()) + 1.0;
        std::vector<double> cur(n, 1.0 / static_cast<double>(n)), next(n);
        double residual = kPosInf;
        for (int iter = 0; iter < 2000000 && residual > 1e-12; ++iter) {
            std::fill(next.begin(), next.end(), 0.0);
            for (const Transition& t : transitions) {
                double flow = cur[t.from] * t.rate / uniform;
                next[t.to] += flow;
                next[t.from] -= flow;
            }
            residual = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                residual = std::max(residual, std::abs(next[i]));
                next[i] += cur[i];
            }
            cur.swap(next);
        }
        if (residual > 1e-12)
            throw NumericalError("truncated_exact: power iteration did not converge");
        pi = cur;
    }

    double total = 0.0;
    for (double v : pi) total += v;
    std::vector<double> log_weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        pi[i] /= total;
        log_weight[i] = pi[i] > 0.0 ? std::log(pi[i]) : kNegInf;
    }
    return StateDistribution{box, std::move(pi), std::move(log_weight), 0.0, 0.0};
}

double total_variation(const StateDistribution& a, const StateDistribution& b) {
    if (!(a.box == b.box)) throw ValidationError("total variation: distributions on different boxes");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) sum += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * sum;
}

}  // namespace fairshare
