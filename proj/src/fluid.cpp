#include "fairshare/fluid.hpp"

#include "fairshare/pf_solver.hpp"

#include <algorithm>
#include <cmath>

namespace fairshare {

namespace {

// Service rates holding the pinned classes at zero: the unique solution of
// mu d = nu_bar_I + (P^T)_{I,.} (mu * applied) restricted to the pinned set.
Vec holding_rates(const TrafficModel& model, const std::vector<int>& pinned,
                  const Vec& applied_full) {
    const Mat Pt = model.routing().transpose();
    const Eigen::Index k = static_cast<Eigen::Index>(pinned.size());
    Mat inner(k, k);
    Vec rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        double inflow = model.nu_bar()[pinned[static_cast<std::size_t>(i)]];
        for (int s = 0; s < model.num_classes(); ++s) {
            bool s_pinned = false;
            for (Eigen::Index j = 0; j < k; ++j)
                if (pinned[static_cast<std::size_t>(j)] == s) {
                    inner(i, j) = Pt(pinned[static_cast<std::size_t>(i)], s);
                    s_pinned = true;
                }
            if (!s_pinned)
                inflow += Pt(pinned[static_cast<std::size_t>(i)], s) * model.mu()[s] * applied_full[s];
        }
        rhs[i] = inflow;
    }
    Mat lhs = Mat::Identity(k, k) - inner;
    Vec mu_d = lhs.partialPivLu().solve(rhs);
    Vec d(k);
    for (Eigen::Index i = 0; i < k; ++i) d[i] = mu_d[i] / model.mu()[pinned[static_cast<std::size_t>(i)]];
    return d;
}

}  // namespace

FluidDrift fluid_drift(const CapacityRegion& region, const TrafficModel& model, const Vec& x) {
    const int R = region.num_classes();
    if (x.size() != R || model.num_classes() != R)
        throw ValidationError("fluid_drift: dimension mismatch");
    if (x.minCoeff() < 0.0) throw ValidationError("fluid_drift: state must be nonnegative");

    std::vector<char> candidate(static_cast<std::size_t>(R), 0);
    std::vector<char> pinned(static_cast<std::size_t>(R), 0);
    for (int r = 0; r < R; ++r) {
        candidate[static_cast<std::size_t>(r)] = x[r] <= kFaceTol;
        pinned[static_cast<std::size_t>(r)] = candidate[static_cast<std::size_t>(r)];
    }

    FluidDrift out;
    // Active-set loop: start with every near-zero class pinned and release the
    // ones whose holding rate exceeds the capacity left by the active classes.
    for (int round = 0; round <= R; ++round) {
        std::vector<int> face, active;
        for (int r = 0; r < R; ++r)
            (pinned[static_cast<std::size_t>(r)] ? face : active).push_back(r);

        Vec lambda = Vec::Zero(R);
        Vec xdot = Vec::Zero(R);
        Vec applied = Vec::Zero(R);

        if (!active.empty()) {
            Vec x_sub(static_cast<Eigen::Index>(active.size()));
            for (std::size_t j = 0; j < active.size(); ++j)
                x_sub[static_cast<Eigen::Index>(j)] = x[active[j]];
            CapacityRegion sub = face.empty()
                                     ? region
                                     : face_restrict(region, Face::from_zero_set(face, R));
            Vec lambda_sub = pf_allocate(sub, x_sub).lambda;
            for (std::size_t j = 0; j < active.size(); ++j) lambda[active[j]] = lambda_sub[static_cast<Eigen::Index>(j)];

            ReducedRouting reduced = remove_excursions(model, face);
            for (std::size_t i = 0; i < reduced.kept.size(); ++i) {
                int r = reduced.kept[i];
                double drift = reduced.nu_tilde[static_cast<Eigen::Index>(i)] - model.mu()[r] * lambda[r];
                for (std::size_t j = 0; j < reduced.kept.size(); ++j) {
                    int s = reduced.kept[j];
                    drift += reduced.routing_tilde(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) *
                             model.mu()[s] * lambda[s];
                }
                xdot[r] = drift;
            }
            applied = lambda;
        }

        if (!face.empty()) {
            Vec d = holding_rates(model, face, lambda);
            // Capacity left for each pinned class once the active allocation
            // is taken out; the class can be held only if its holding rate fits.
            Vec slack = region.capacity() - region.usage() * lambda;
            int release = -1;
            double worst = 1e-9;
            for (std::size_t i = 0; i < face.size(); ++i) {
                int r = face[i];
                double residual_rate = kPosInf;
                for (int l = 0; l < region.num_links(); ++l)
                    if (region.usage()(l, r) > 0.0)
                        residual_rate = std::min(residual_rate, slack[l] / region.usage()(l, r));
                double violation = d[static_cast<Eigen::Index>(i)] - residual_rate;
                if (violation > worst) {
                    worst = violation;
                    release = r;
                }
            }
            if (release >= 0) {
                pinned[static_cast<std::size_t>(release)] = 0;
                continue;  // class lifts off; recompute with it active
            }
            for (std::size_t i = 0; i < face.size(); ++i) applied[face[i]] = d[static_cast<Eigen::Index>(i)];
        }

        out.xdot = xdot;
        out.face = face;
        out.applied_rates = applied;
        out.h_bound = 0.0;
        for (int r : active) {
            if (x[r] <= kFaceTol) continue;  // released class still at zero
            double u = std::log(lambda[r] / model.rho()[r]);
            if (xdot[r] != 0.0) out.h_bound += u * xdot[r];
        }
        return out;
    }
    throw NumericalError("fluid_drift: face detection did not stabilize");
}

namespace {

struct Stepper {
    const CapacityRegion& region;
    const TrafficModel& model;
    Vec service;  // running D_r

    // One Euler step with halving refinement; lands exactly on the boundary at
    // the deepest level, solving jointly for the service amounts that keep the
    // flow balance exact.
    Vec advance(const Vec& x, double h, int depth) {
        FluidDrift drift = fluid_drift(region, model, x);
        Vec next = x + h * drift.xdot;
        for (int r : drift.face) next[r] = x[r];  // pinned classes do not move

        bool clipped = next.minCoeff() < 0.0;
        if (clipped && depth < 20) {
            Vec mid = advance(x, 0.5 * h, depth + 1);
            return advance(mid, 0.5 * h, depth + 1);
        }

        Vec applied = drift.applied_rates;
        if (clipped) {
            // Classes crossing zero are landed on the boundary; their service
            // integral absorbs exactly the inflow plus the remaining mass.
            std::vector<char> landing(static_cast<std::size_t>(x.size()), 0);
            for (int round = 0; round < model.num_classes(); ++round) {
                bool grew = false;
                for (Eigen::Index r = 0; r < next.size(); ++r)
                    if (next[r] < 0.0 && !landing[static_cast<std::size_t>(r)]) {
                        landing[static_cast<std::size_t>(r)] = 1;
                        grew = true;
                    }
                if (!grew) break;
                std::vector<int> land_set;
                for (Eigen::Index r = 0; r < next.size(); ++r)
                    if (landing[static_cast<std::size_t>(r)]) land_set.push_back(static_cast<int>(r));

                // Holding with the extra x_r/h mass drained over the step.
                TrafficModel shifted(model.nu_bar() +
                                         [&] {
                                             Vec extra = Vec::Zero(x.size());
                                             for (int r : land_set) extra[r] = x[r] / h;
                                             return extra;
                                         }(),
                                     model.mu(), model.routing());
                Vec d = holding_rates(shifted, land_set, applied);
                for (std::size_t i = 0; i < land_set.size(); ++i)
                    applied[land_set[i]] = d[static_cast<Eigen::Index>(i)];

                next = x;
                for (Eigen::Index r = 0; r < x.size(); ++r) {
                    double flow = model.nu_bar()[r] - model.mu()[r] * applied[r];
                    for (Eigen::Index s = 0; s < x.size(); ++s)
                        flow += model.routing()(s, r) * model.mu()[s] * applied[s];
                    next[r] = x[r] + h * flow;
                }
                for (int r : land_set) next[r] = 0.0;
                for (int r : drift.face)
                    if (!landing[static_cast<std::size_t>(r)]) next[r] = x[r];
            }
        }
        service += h * applied;
        return next;
    }
};

}  // namespace

FluidTrajectory integrate(const CapacityRegion& region, const TrafficModel& model, const Vec& x0,
                          double t_end, double h_step) {
    if (x0.minCoeff() < 0.0) throw ValidationError("integrate: initial state must be nonnegative");
    if (!(h_step > 0.0) || !(t_end > 0.0))
        throw ValidationError("integrate: horizon and step must be positive");

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / h_step - 1e-12));
    FluidTrajectory traj;
    traj.h_step = h_step;
    Stepper stepper{region, model, Vec::Zero(x0.size())};

    Vec x = x0;
    for (std::size_t k = 0; k <= steps; ++k) {
        FluidDrift drift = fluid_drift(region, model, x);
        traj.times.push_back(std::min(static_cast<double>(k) * h_step, t_end));
        traj.states.push_back(x);
        std::uint32_t mask = 0;
        for (int r : drift.face) mask |= (1u << r);
        traj.faces.push_back(mask);
        traj.drifts.push_back(drift.xdot);
        traj.h_bounds.push_back(drift.h_bound);
        traj.cumulative_service.push_back(stepper.service);
        if (k < steps) {
            double h = std::min(h_step, t_end - static_cast<double>(k) * h_step);
            x = stepper.advance(x, h, 0);
        }
    }
    return traj;
}

DescentReport descent_report(const FluidTrajectory& trajectory, const LyapunovContext& ctx) {
    if (!ctx.stable)
        throw ValidationError("descent report: loads must be interior");
    DescentReport report;
    if (trajectory.states.empty()) return report;

    double rate_scale = ctx.region.capacity().maxCoeff();
    for (int r = 0; r < ctx.region.num_classes(); ++r)
        rate_scale = std::max(rate_scale, ctx.region.max_class_rate(r));
    NormBounds bounds = norm_bounds_certificate(ctx, 256, 0x4c2e);
    report.tolerance = 10.0 * trajectory.h_step * rate_scale * bounds.upper;

    double initial = lyapunov_value(ctx, trajectory.states.front());
    report.initial_value = initial;
    report.monotone = true;
    double previous = initial;
    for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
        double value = lyapunov_value(ctx, trajectory.states[k]);
        if (value > previous + report.tolerance) report.monotone = false;
        if (report.t_half == kPosInf && value <= 0.5 * initial)
            report.t_half = trajectory.times[k];
        previous = value;
        report.final_value = value;
    }
    return report;
}

}  // namespace fairshare
