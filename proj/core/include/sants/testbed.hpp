#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

#include "sants/action.hpp"
#include "sants/config.hpp"
#include "sants/trajectory.hpp"

namespace sants {

enum class Phase { Coarse, Fine };
enum class Corruption { None, LateDegrade };

std::string_view to_string(Phase p);
std::string_view to_string(Corruption c);
Phase parse_phase(std::string_view s);
Corruption parse_corruption(std::string_view s);

/// Task context seen by the policy (observation / language / history stand-in).
struct Condition {
    Eigen::VectorXd vector;
};

/// One synthetic instance. `residual` is private to the synthetic policy and is
/// regenerated from (seed, phase, corruption).
struct EpisodeSpec {
    std::uint64_t seed = 0;
    Phase phase = Phase::Coarse;
    Corruption corruption = Corruption::None;
    Condition cond;
    LatentState x0;
    ActionChunk demo;
    Eigen::VectorXd residual;
};

struct ForwardOutput {
    Eigen::VectorXd velocity;
    Eigen::VectorXd feature;
};

/// Frozen video-action policy contract. Implementations are pure and
/// read-only, so one instance may serve many concurrent rollout workers.
class FrozenPolicy {
  public:
    virtual ~FrozenPolicy() = default;

    /// Flow velocity dx/dsigma at (x, sigma) and the pooled feature z.
    virtual ForwardOutput forward(const EpisodeSpec& episode, const LatentState& x, double sigma) const = 0;

    /// Action chunk conditioned on the terminal latent.
    virtual ActionChunk act(const EpisodeSpec& episode, const LatentState& x, double sigma) const = 0;

    virtual int latent_dim() const = 0;
    virtual int feature_dim() const = 0;

    /// Digest of all frozen parameters; unchanged by scheduler training.
    virtual std::uint32_t state_checksum() const = 0;
};

/// Calibration knobs of the synthetic testbed. Defaults are tuned so that
/// depth scans reproduce the coarse/fine saturation bands and late-degrade
/// episodes get worse below `degrade_threshold`.
struct TestbedConfig {
    int d_z = 16;
    int d_c = 8;
    int d_feat = 32;
    int horizon = 16;
    int basis = 4;

    double p_coarse = 0.5;
    double p_late_degrade = 0.2;

    // Late-degrade episodes: below the threshold the residual weight ramps
    // linearly from its value at the threshold to `degrade_peak` at sigma 0.
    double degrade_threshold = 0.3;
    double degrade_peak = 1.0;
    double risk_signature = 1.5;

    // Residual action error multiplier s(sigma) = floor + (1 - floor) * sigma^exponent.
    double coarse_floor = 0.88;
    double coarse_exponent = 8.0;
    double coarse_residual_scale = 0.02;
    double fine_floor = 0.77;
    double fine_exponent = 1.5;
    double fine_residual_scale = 0.3;

    double latent_gain = 0.002;
    double position_scale = 0.1;
    double rotation_scale = 0.3;
    double gripper_gain = 4.0;

    void validate() const;
};

void read_testbed_config(KeyValueDocument& doc, TestbedConfig& cfg);
std::string to_key_value_text(const TestbedConfig& cfg);

/// First-order flow update x + v * (sigma_to - sigma_from). Throws on backward steps.
LatentState integrate_step(const LatentState& x, const Eigen::VectorXd& v, double sigma_from, double sigma_to);

/// Straight-path flow testbed with analytic velocity and a linear action head.
class SyntheticPolicy final : public FrozenPolicy {
  public:
    SyntheticPolicy(TestbedConfig cfg, std::uint64_t run_seed);

    ForwardOutput forward(const EpisodeSpec& episode, const LatentState& x, double sigma) const override;
    ActionChunk act(const EpisodeSpec& episode, const LatentState& x, double sigma) const override;
    int latent_dim() const override { return cfg_.d_z; }
    int feature_dim() const override { return cfg_.d_feat; }
    std::uint32_t state_checksum() const override;

    /// Action head without the phase residual; demo = ideal_action(x0).
    ActionChunk ideal_action(const EpisodeSpec& episode, const LatentState& x) const;

    /// Residual multiplier for a terminal noise level.
    double residual_multiplier(Phase phase, double sigma) const;

    /// Total residual weight used by `act`: the phase multiplier plus the
    /// late-degrade penalty below the threshold.
    double residual_weight(const EpisodeSpec& episode, double sigma) const;

    /// Deterministic function of the seed: phase, corruption, cond, x0, demo.
    EpisodeSpec sample_episode(std::uint64_t seed) const;

    /// Rebuilds an episode with explicit labels (used when loading episode files).
    EpisodeSpec make_episode(std::uint64_t seed, Phase phase, Corruption corruption) const;

    /// Initial noise for an episode, drawn from the episode's init-noise substream.
    LatentState initial_noise(const EpisodeSpec& episode) const;

    const TestbedConfig& config() const { return cfg_; }
    std::uint64_t run_seed() const { return run_seed_; }

  private:
    ActionChunk decode(const EpisodeSpec& episode, const LatentState& x, double residual_weight) const;

    TestbedConfig cfg_;
    std::uint64_t run_seed_;
    Eigen::MatrixXd projection_;  // d_feat x (d_z + d_c + 1 + 2)
    Eigen::MatrixXd readout_x_;   // (7 * basis) x d_z
    Eigen::MatrixXd readout_c_;   // (7 * basis) x d_c
    Eigen::MatrixXd basis_;       // horizon x basis
};

}  // namespace sants
