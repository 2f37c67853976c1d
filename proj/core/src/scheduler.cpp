#include "sants/scheduler.hpp"

#include <random>
#include <sstream>

#include "sants/grid.hpp"

namespace sants {

namespace {

void require_finite(const LatentState& x, const NoiseTrajectory& traj) {
    if (!x.allFinite()) {
        throw NumericFault("non-finite latent during scheduled integration\n" + dump_trajectory(traj));
    }
}

template <bool Stochastic>
RolloutResult run_loop(const ScheduleContext& ctx, const DecisionHeadFn& head, const LatentState& init_noise,
                       Rng* rng) {
    const auto& cfg = ctx.config;
    cfg.validate();
    if (init_noise.size() != ctx.policy.latent_dim()) {
        throw std::invalid_argument("scheduler: init noise dimension mismatch");
    }
    const auto grid = build_full_grid(cfg);

    RolloutResult result;
    auto& traj = result.trajectory;
    traj.sigma_start = cfg.sigma_start;
    traj.sigma_early = cfg.sigma_early;

    // Mandatory first update: sigma_start -> sigma_early.
    LatentState x = init_noise;
    {
        const auto fwd = ctx.policy.forward(ctx.episode, x, cfg.sigma_start);
        x = integrate_step(x, fwd.velocity, cfg.sigma_start, cfg.sigma_early);
        traj.n_forward = 1;
        traj.n_updates = 1;
        require_finite(x, traj);
    }

    double sigma = cfg.sigma_early;
    double hazard = 0.0;
    const int cap = cfg.decision_cap();
    for (int decision = 0;; ++decision) {
        TrajectoryStep step;
        step.sigma_before = sigma;
        if (sigma <= cfg.sigma_min || decision >= cap) {
            step.decision = Decision::ForcedStop;
            step.hazard = hazard;
            step.stop_cdf = -std::expm1(-hazard);
            traj.hit_decision_cap = sigma > cfg.sigma_min;
            traj.steps.push_back(step);
            break;
        }

        const auto fwd = ctx.policy.forward(ctx.episode, x, sigma);
        ++traj.n_forward;
        const NetOutput out = head(fwd.feature, sigma, decision);
        const auto sd = stop_probabilities(hazard, hazard_increment(out.score));
        hazard = sd.hazard;
        step.delta_hazard = sd.delta_hazard;
        step.hazard = sd.hazard;
        step.stop_cdf = sd.stop_cdf;

        const double reference_ratio = grid_step_ratio(grid, sigma);
        DecisionRecord record;
        if constexpr (Stochastic) {
            record.feature = fwd.feature;
            record.sigma = sigma;
            record.stop_prob = sd.stop_prob;
            record.reference_ratio = reference_ratio;
        }

        bool stop = false;
        if (adaptive_stop(ctx.mode)) {
            if constexpr (Stochastic) {
                std::uniform_real_distribution<double> unit(0.0, 1.0);
                stop = unit(*rng) < sd.stop_prob;
                result.stop_logprob += stop ? log_stop_prob(out.score) : log_continue_prob(out.score);
            } else {
                stop = sd.stop_cdf >= cfg.eta;
            }
        }
        if (stop) {
            step.decision = Decision::Stop;
            traj.steps.push_back(step);
            if constexpr (Stochastic) {
                record.stopped = true;
                result.decisions.push_back(std::move(record));
            }
            break;
        }

        double ratio = 0.0;
        if (!adaptive_jump(ctx.mode)) {
            ratio = clamp_ratio(reference_ratio);
        } else if constexpr (Stochastic) {
            const auto params = beta_from_mode(out.mode, out.concentration);
            ratio = sample_ratio(params, *rng);
            result.jump_logprob += ratio_log_pdf(params, ratio);
            record.beta = params;
            record.ratio = ratio;
        } else {
            ratio = clamp_ratio(out.mode);
        }
        if constexpr (Stochastic) {
            if (!adaptive_jump(ctx.mode)) record.beta = beta_from_mode(out.mode, out.concentration);
            result.decisions.push_back(std::move(record));
        }

        const double next = ratio * sigma;
        x = integrate_step(x, fwd.velocity, sigma, next);
        ++traj.n_updates;
        step.decision = Decision::Continue;
        step.ratio = ratio;
        traj.steps.push_back(step);
        require_finite(x, traj);
        sigma = next;
    }

    traj.terminal_sigma = sigma;
    traj.terminal_latent = std::move(x);
    return result;
}

}  // namespace

std::string_view to_string(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::Full: return "full";
        case ScheduleMode::StopOnly: return "stop_only";
        case ScheduleMode::JumpOnly: return "jump_only";
    }
    return "?";
}

ScheduleMode parse_schedule_mode(std::string_view s) {
    if (s == "full") return ScheduleMode::Full;
    if (s == "stop_only") return ScheduleMode::StopOnly;
    if (s == "jump_only") return ScheduleMode::JumpOnly;
    throw ConfigError("unknown schedule mode '" + std::string(s) + "'");
}

DecisionHeadFn net_head(const SchedulerNet& net) {
    return [&net](const Eigen::VectorXd& feature, double sigma, int) { return net.forward(feature, sigma); };
}

NoiseTrajectory run_deploy(const ScheduleContext& ctx, const DecisionHeadFn& head, const LatentState& init_noise) {
    return run_loop<false>(ctx, head, init_noise, nullptr).trajectory;
}

NoiseTrajectory run_deploy(const ScheduleContext& ctx, const SchedulerNet& net, const LatentState& init_noise) {
    return run_deploy(ctx, net_head(net), init_noise);
}

RolloutResult run_rollout(const ScheduleContext& ctx, const DecisionHeadFn& head, const LatentState& init_noise,
                          Rng& rng) {
    return run_loop<true>(ctx, head, init_noise, &rng);
}

RolloutResult run_rollout(const ScheduleContext& ctx, const SchedulerNet& net, const LatentState& init_noise,
                          Rng& rng) {
    return run_rollout(ctx, net_head(net), init_noise, rng);
}

std::vector<LatentState> integrate_levels(const FrozenPolicy& policy, const EpisodeSpec& episode,
                                          std::span<const double> levels, const LatentState& init_noise) {
    if (levels.empty()) throw std::invalid_argument("integrate_levels: empty level list");
    std::vector<LatentState> states;
    states.reserve(levels.size());
    states.push_back(init_noise);
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        const auto fwd = policy.forward(episode, states.back(), levels[i]);
        states.push_back(integrate_step(states.back(), fwd.velocity, levels[i], levels[i + 1]));
        if (!states.back().allFinite()) throw NumericFault("non-finite latent on fixed level path");
    }
    return states;
}

NoiseTrajectory run_fixed_levels(const FrozenPolicy& policy, const EpisodeSpec& episode,
                                 std::span<const double> levels, const LatentState& init_noise) {
    if (levels.size() < 2) throw std::invalid_argument("run_fixed_levels: need at least two levels");
    auto states = integrate_levels(policy, episode, levels, init_noise);
    NoiseTrajectory traj;
    traj.sigma_start = levels[0];
    traj.sigma_early = levels[1];
    for (std::size_t i = 1; i + 1 < levels.size(); ++i) {
        TrajectoryStep step;
        step.sigma_before = levels[i];
        step.decision = Decision::Continue;
        step.ratio = levels[i + 1] / levels[i];
        traj.steps.push_back(step);
    }
    TrajectoryStep last;
    last.sigma_before = levels.back();
    last.decision = Decision::ForcedStop;
    traj.steps.push_back(last);
    traj.n_updates = static_cast<int>(levels.size()) - 1;
    traj.n_forward = traj.n_updates;
    traj.terminal_sigma = levels.back();
    traj.terminal_latent = std::move(states.back());
    return traj;
}

std::string dump_trajectory(const NoiseTrajectory& traj) {
    std::ostringstream out;
    out << "sigma_start=" << format_real(traj.sigma_start) << " sigma_early=" << format_real(traj.sigma_early)
        << " n_updates=" << traj.n_updates << " n_forward=" << traj.n_forward << '\n';
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const auto& s = traj.steps[i];
        out << i << ' ' << to_string(s.decision) << " sigma=" << format_real(s.sigma_before)
            << " ratio=" << (s.ratio ? format_real(*s.ratio) : std::string("-"))
            << " dH=" << format_real(s.delta_hazard) << " H=" << format_real(s.hazard)
            << " F=" << format_real(s.stop_cdf) << '\n';
    }
    return out.str();
}

}  // namespace sants
