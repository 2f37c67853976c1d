#include "sants/trajectory.hpp"

#include <cmath>
#include <string>

namespace sants {

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::Continue: return "continue";
        case Decision::Stop: return "stop";
        case Decision::ForcedStop: return "forced_stop";
    }
    return "?";
}

std::vector<double> NoiseTrajectory::sigma_sequence() const {
    std::vector<double> out{sigma_start, sigma_early};
    for (std::size_t i = 1; i < steps.size(); ++i) out.push_back(steps[i].sigma_before);
    return out;
}

std::vector<double> NoiseTrajectory::replay_sigmas() const {
    std::vector<double> out{sigma_start, sigma_early};
    double sigma = sigma_early;
    for (const auto& s : steps) {
        if (s.decision != Decision::Continue) break;
        sigma = *s.ratio * sigma;
        out.push_back(sigma);
    }
    return out;
}

std::string NoiseTrajectory::check_invariants(double tolerance) const {
    if (steps.empty()) return "no decision steps";
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
        if (steps[i].decision != Decision::Continue) return "terminal decision before final step";
        if (!steps[i].ratio) return "continue step without ratio";
    }
    const auto& last = steps.back();
    if (last.decision == Decision::Continue) return "final step is not a stop";
    double prev_h = 0.0;
    double prev_sigma = sigma_early;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (s.hazard + tolerance < prev_h) return "cumulative hazard decreased at step " + std::to_string(i);
        if (std::abs(s.stop_cdf - (1.0 - std::exp(-s.hazard))) > tolerance) return "F != 1 - exp(-H)";
        if (i > 0 && !(s.sigma_before < prev_sigma)) return "sigma not strictly decreasing";
        prev_h = s.hazard;
        prev_sigma = s.sigma_before;
    }
    // Counting: the mandatory update plus one per continue step.
    int continues = 0;
    for (const auto& s : steps) continues += s.decision == Decision::Continue ? 1 : 0;
    if (n_updates != continues + 1) return "n_updates does not match continue count";
    const int expected_forward = last.decision == Decision::Stop ? n_updates + 1 : n_updates;
    if (n_forward != expected_forward) return "forward-pass accounting mismatch";
    if (terminal_sigma != last.sigma_before) return "terminal sigma mismatch";
    return {};
}

}  // namespace sants
