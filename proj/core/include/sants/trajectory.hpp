#pragma once

#include <Eigen/Core>
#include <optional>
#include <string_view>
#include <vector>

namespace sants {

using LatentState = Eigen::VectorXd;

enum class Decision { Continue, Stop, ForcedStop };

std::string_view to_string(Decision d);

/// One scheduler decision point. The mandatory sigma_start -> sigma_early
/// update precedes the first decision and is not recorded as a step.
struct TrajectoryStep {
    double sigma_before = 0.0;
    Decision decision = Decision::Continue;
    std::optional<double> ratio;  // set only for Continue
    double delta_hazard = 0.0;
    double hazard = 0.0;
    double stop_cdf = 0.0;
};

struct NoiseTrajectory {
    double sigma_start = 1.0;
    double sigma_early = 0.0;
    std::vector<TrajectoryStep> steps;
    int n_updates = 0;
    int n_forward = 0;
    double terminal_sigma = 1.0;
    LatentState terminal_latent;
    bool hit_decision_cap = false;

    double terminal_depth() const { return 1.0 - terminal_sigma; }

    /// Sigma sequence visited: sigma_start, sigma_early, then each decision's
    /// level, ending at terminal_sigma.
    std::vector<double> sigma_sequence() const;

    /// Re-derives the sigma sequence from the recorded ratios alone.
    std::vector<double> replay_sigmas() const;

    /// Checks structural invariants (single terminal decision, monotone H,
    /// F = 1 - exp(-H), forward/update accounting). Returns an empty string
    /// when the record is consistent, otherwise a description of the first
    /// violated invariant.
    std::string check_invariants(double tolerance = 1e-12) const;
};

}  // namespace sants
