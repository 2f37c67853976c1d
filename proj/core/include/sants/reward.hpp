#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sants/action.hpp"
#include "sants/config.hpp"
#include "sants/testbed.hpp"
#include "sants/trajectory.hpp"

namespace sants {

struct ComponentWeights {
    double position = 1.0;
    double rotation = 0.6;
    double gripper = 1.0;
};

/// Path-reward hyperparameters (anchor levels, error weights, key-frame
/// rule, penalty and cost schedule, normalization stabilizers).
struct RewardConfig {
    double sigma_lo = 0.963;
    double sigma_hi = 0.0;
    double sigma_ref = 0.0;
    double w_seq = 0.6;
    double w_delta = 0.4;
    ComponentWeights seq_weights{1.0, 0.6, 1.0};
    ComponentWeights delta_weights{1.0, 0.2, 1.0};
    double rho = 0.06;
    double eta_mot = 0.8;
    double eta_grip = 1.8;
    double eta_early = 0.0;
    double gripper_event = 0.25;
    double lambda_pen = 1.0;
    double lambda_c = 0.25;
    double c0 = 0.2;
    double c1 = 0.0;
    double gamma = 2.0;
    double epsilon = 1e-3;
    double kappa = 0.02;
    double bce_clamp = 1e-6;

    void validate() const;
};

void read_reward_config(KeyValueDocument& doc, RewardConfig& cfg);
std::string to_key_value_text(const RewardConfig& cfg);

/// Per-timestep key-frame weights from the demonstration, mean-normalized to 1.
std::vector<double> keyframe_weights(const ActionChunk& demo, const RewardConfig& cfg);

/// Weighted sequence error: position squared error, squared geodesic angle, gripper BCE.
double seq_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                 const RewardConfig& cfg);

/// Weighted error on adjacent differences (motion trend).
double delta_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                   const RewardConfig& cfg);

/// Key-frame-weighted squared action error (position, angle, gripper), used as
/// the "masked action MSE" of depth scans and evaluation tables.
double masked_action_error(const ActionChunk& pred, const ActionChunk& demo, const std::vector<double>& weights,
                           const RewardConfig& cfg);

/// u = clip((L_lo - L_tau) / max(L_lo - L_hi, epsilon), -1, 1).
double anchor_gain(double loss_lo, double loss_hi, double loss_tau, double epsilon);

/// D = g / (g + kappa), g = max(L_lo - L_hi, 0).
double difficulty_gate(double loss_lo, double loss_hi, double kappa);

double quality_term(double u_seq, double u_delta, double d_seq, double d_delta, const RewardConfig& cfg);

struct UpdateCost {
    double cost = 0.0;
    bool clamped = false;  // n exceeded n_full
};

/// Normalized cumulative cost of n video-state updates out of n_full.
UpdateCost update_cost(int n, int n_full, const RewardConfig& cfg);

/// Anchor actions for one episode and one initial noise.
struct AnchorCache {
    std::uint64_t episode_seed = 0;
    std::uint32_t noise_digest = 0;
    ActionChunk action_lo;
    ActionChunk action_hi;
};

std::uint32_t latent_digest(const LatentState& x);

/// Runs the shallow (one update to sigma_lo) and full-grid anchors.
AnchorCache compute_anchors(const FrozenPolicy& policy, const EpisodeSpec& episode, const LatentState& init_noise,
                            const SchedulerConfig& sched, const RewardConfig& cfg);

struct RewardBreakdown {
    double seq_tau = 0.0, delta_tau = 0.0;
    double seq_lo = 0.0, seq_hi = 0.0;
    double delta_lo = 0.0, delta_hi = 0.0;
    double u_seq = 0.0, u_delta = 0.0;
    double d_seq = 0.0, d_delta = 0.0;
    double quality = 0.0;
    double cost = 0.0;
    double ret = 0.0;
    int n_updates = 0;
    bool cost_clamped = false;
};

/// Reward for an already-generated action chunk.
RewardBreakdown path_return(const ActionChunk& action_tau, int n_updates, const EpisodeSpec& episode,
                            const AnchorCache& anchors, int n_full, const RewardConfig& cfg);

/// Reward for a scheduled trajectory: decodes the terminal action with the policy.
/// Throws std::invalid_argument when the anchors belong to another episode or noise.
RewardBreakdown path_return(const NoiseTrajectory& traj, const EpisodeSpec& episode, const FrozenPolicy& policy,
                            const LatentState& init_noise, const AnchorCache& anchors, int n_full,
                            const RewardConfig& cfg);

/// One JSON object (single line) for audit logs.
std::string to_json_line(const RewardBreakdown& r);

}  // namespace sants
