#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sants/config.hpp"
#include "sants/hazard.hpp"
#include "sants/scheduler_net.hpp"
#include "sants/testbed.hpp"
#include "sants/trajectory.hpp"

namespace sants {

/// Which scheduling decisions are adaptive.
///  - Full: adaptive stop and adaptive jump.
///  - StopOnly: adaptive stop, jumps follow the fixed full-grid ratio.
///  - JumpOnly: adaptive jumps, stop only at sigma_min.
enum class ScheduleMode { Full, StopOnly, JumpOnly };

std::string_view to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(std::string_view s);

inline bool adaptive_stop(ScheduleMode m) { return m != ScheduleMode::JumpOnly; }
inline bool adaptive_jump(ScheduleMode m) { return m != ScheduleMode::StopOnly; }

/// Head outputs for one decision point; lets tests script (g, m, c) directly.
using DecisionHeadFn = std::function<NetOutput(const Eigen::VectorXd& feature, double sigma, int decision)>;

DecisionHeadFn net_head(const SchedulerNet& net);

/// What a training rollout sampled at one (non-forced) decision point, with
/// the inputs needed to recompute its probability under new parameters.
struct DecisionRecord {
    Eigen::VectorXd feature;
    double sigma = 0.0;
    bool stopped = false;
    std::optional<double> ratio;  // sampled ratio when continuing adaptively
    double stop_prob = 0.0;
    BetaParams beta;
    double reference_ratio = 0.0;  // fixed-grid ratio at this sigma
};

struct RolloutResult {
    NoiseTrajectory trajectory;
    std::vector<DecisionRecord> decisions;
    double stop_logprob = 0.0;  // sum of log h / log (1 - h) over sampled stop decisions
    double jump_logprob = 0.0;  // sum of Beta log densities over sampled ratios (unscaled)
};

struct ScheduleContext {
    const FrozenPolicy& policy;
    const EpisodeSpec& episode;
    const SchedulerConfig& config;
    ScheduleMode mode = ScheduleMode::Full;
};

/// Deterministic deployment: stop once F >= eta, otherwise jump by the Beta mode.
NoiseTrajectory run_deploy(const ScheduleContext& ctx, const DecisionHeadFn& head, const LatentState& init_noise);
NoiseTrajectory run_deploy(const ScheduleContext& ctx, const SchedulerNet& net, const LatentState& init_noise);

/// Stochastic training rollout: stop ~ Bernoulli(h), ratio ~ Beta(alpha, beta).
RolloutResult run_rollout(const ScheduleContext& ctx, const DecisionHeadFn& head, const LatentState& init_noise,
                          Rng& rng);
RolloutResult run_rollout(const ScheduleContext& ctx, const SchedulerNet& net, const LatentState& init_noise,
                          Rng& rng);

/// Integrates along explicit levels (levels[0] -> levels[1] -> ...), with no
/// scheduler. Used for anchors, fixed-step baselines and depth scans.
NoiseTrajectory run_fixed_levels(const FrozenPolicy& policy, const EpisodeSpec& episode,
                                 std::span<const double> levels, const LatentState& init_noise);

/// Latent after each prefix of `levels`: result[i] is the state at levels[i].
std::vector<LatentState> integrate_levels(const FrozenPolicy& policy, const EpisodeSpec& episode,
                                          std::span<const double> levels, const LatentState& init_noise);

/// Human-readable dump of a (possibly partial) trajectory for fault reports.
std::string dump_trajectory(const NoiseTrajectory& traj);

}  // namespace sants
