#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sants/config.hpp"
#include "sants/reward.hpp"
#include "sants/scheduler.hpp"
#include "sants/scheduler_net.hpp"
#include "sants/testbed.hpp"

namespace sants {

struct TrainerConfig {
    double learning_rate = 1e-4;
    double weight_decay = 0.01;  // decoupled
    int ppo_epochs = 4;
    double clip_range = 0.2;
    double grad_norm_clip = 1.0;
    double lambda_kl = 0.02;
    double jump_logprob_scale = 0.5;
    double ema_decay = 0.95;
    int total_updates = 3000;
    int rollouts_per_update = 1;
    int eval_interval = 250;
    int eval_episodes = 200;
    std::uint64_t seed = 0;  // set from the run seed, not read from config files

    // KL reference: constant per-decision stop probability, and a broad Beta
    // whose mode is the fixed-grid ratio at the current sigma.
    double kl_ref_stop = 0.1;
    double kl_ref_concentration = 2.5;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    int hidden1 = 512;
    int hidden2 = 256;
    double init_head_scale = 0.01;
    double init_stop_bias = 0.0;
    double init_mode_bias = 0.0;
    double init_concentration_bias = 0.0;

    ScheduleMode mode = ScheduleMode::Full;

    void validate() const;
    NetShape net_shape(int d_feat) const { return {d_feat + 1, hidden1, hidden2}; }
    NetInit net_init() const {
        return {init_head_scale, init_stop_bias, init_mode_bias, init_concentration_bias};
    }
};

void read_trainer_config(KeyValueDocument& doc, TrainerConfig& cfg);
std::string to_key_value_text(const TrainerConfig& cfg);

/// One sampled path with everything PPO needs to re-score it.
struct PathSample {
    RolloutResult rollout;
    RewardBreakdown reward;
    ScheduleMode mode = ScheduleMode::Full;
    double behavior_logprob = 0.0;
};

/// Stop/continue log-probabilities plus scaled Beta log densities, recomputed
/// under `net`. Forced stops contribute nothing. If `grad` is non-empty the
/// gradient of the result (times `weight`) is accumulated into it.
double path_logprob(const SchedulerNet& net, const PathSample& sample, const TrainerConfig& cfg,
                    std::span<double> grad = {}, double weight = 1.0);

/// Mean over decisions of the Bernoulli and Beta KL terms to the reference.
double kl_reference_penalty(const SchedulerNet& net, const PathSample& sample, const TrainerConfig& cfg,
                            std::span<double> grad = {}, double weight = 1.0);

/// Same quantity computed from head outputs directly (one entry per decision).
double kl_reference_penalty(std::span<const NetOutput> outputs, const PathSample& sample,
                            const TrainerConfig& cfg);

/// AdamW state; moments persist across updates.
struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;
};

/// Scales `grad` in place so its L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

void adamw_step(std::span<double> params, std::span<const double> grad, AdamState& state, const TrainerConfig& cfg);

/// Exponential moving average of returns, starting at zero.
struct EmaBaseline {
    double value = 0.0;
    std::int64_t count = 0;
    void update(double ret, double decay) {
        value = decay * value + (1.0 - decay) * ret;
        ++count;
    }
};

struct PpoStats {
    double loss = 0.0;
    double surrogate = 0.0;
    double kl = 0.0;
    double grad_norm = 0.0;  // pre-clip norm of the last epoch
    double first_ratio = 1.0;
    double advantage = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

/// Clipped-surrogate update over `samples`; advantages use the baseline value
/// before this batch, and the baseline is advanced afterwards.
PpoStats ppo_update(SchedulerNet& net, std::span<const PathSample> samples, EmaBaseline& baseline, AdamState& adam,
                    const TrainerConfig& cfg);

/// Aggregates from deterministic evaluation over a fixed split.
struct EvalSummary {
    int episodes = 0;
    double mean_return = 0.0;
    double mean_error = 0.0;  // masked action error
    double mean_seq_error = 0.0;
    double mean_delta_error = 0.0;
    double mean_updates = 0.0;
    double mean_terminal_depth = 0.0;
};

/// Pre-computed per-episode inputs shared by every evaluation.
struct EvalEpisode {
    EpisodeSpec episode;
    LatentState init_noise;
    AnchorCache anchors;
};

std::vector<EvalEpisode> prepare_eval(const SyntheticPolicy& policy, std::vector<EpisodeSpec> episodes,
                                      const SchedulerConfig& sched, const RewardConfig& reward, int workers = 1);

/// Scores one finished trajectory on an evaluation episode.
struct EpisodeScore {
    RewardBreakdown reward;
    double error = 0.0;
    double terminal_depth = 0.0;
};

EpisodeScore score_trajectory(const SyntheticPolicy& policy, const EvalEpisode& ev, const NoiseTrajectory& traj,
                              const SchedulerConfig& sched, const RewardConfig& reward);

EvalSummary summarize(std::span<const EpisodeScore> scores);

EvalSummary evaluate_net(const SyntheticPolicy& policy, const SchedulerNet& net, std::span<const EvalEpisode> eval,
                         const SchedulerConfig& sched, const RewardConfig& reward, ScheduleMode mode,
                         int workers = 1);

/// Better checkpoint: higher mean return, then fewer updates.
bool better_checkpoint(const EvalSummary& a, const EvalSummary& b);

struct TrainOptions {
    int workers = 1;
    /// Receives each training log line (one JSON object, no newline).
    std::function<void(const std::string&)> log;
    /// Called whenever a new best checkpoint is selected.
    std::function<void(const SchedulerNet&, const EvalSummary&, int update)> on_best;
};

struct TrainResult {
    SchedulerNet final_net;
    SchedulerNet best_net;
    EvalSummary best_eval;
    int best_update = -1;
    int updates_done = 0;
    int aborted_updates = 0;
    bool stream_exhausted = false;
    std::uint32_t policy_checksum_before = 0;
    std::uint32_t policy_checksum_after = 0;
};

/// Source of training episodes; returns nullopt when exhausted.
using EpisodeStream = std::function<std::optional<EpisodeSpec>()>;

/// Infinite stream of episodes drawn from the "episodes/train" substream.
EpisodeStream make_episode_stream(const SyntheticPolicy& policy, std::uint64_t run_seed);

/// Samples one rollout with anchors and reward (no parameter change).
PathSample sample_path(const SyntheticPolicy& policy, const SchedulerNet& net, const EpisodeSpec& episode,
                       const SchedulerConfig& sched, const RewardConfig& reward, const TrainerConfig& cfg, Rng& rng);

TrainResult train(const SyntheticPolicy& policy, SchedulerNet net, const EpisodeStream& stream,
                  std::span<const EvalEpisode> validation, const SchedulerConfig& sched, const RewardConfig& reward,
                  const TrainerConfig& cfg, const TrainOptions& options = {});

}  // namespace sants
