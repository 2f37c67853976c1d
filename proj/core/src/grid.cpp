#include "sants/grid.hpp"

#include <string>

namespace sants {

std::vector<double> build_full_grid(const SchedulerConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_full;
    std::vector<double> levels(static_cast<std::size_t>(n) + 1);
    levels[0] = cfg.sigma_start;
    const double span = cfg.sigma_early - cfg.sigma_full;
    for (int i = 1; i <= n; ++i) {
        levels[static_cast<std::size_t>(i)] =
            cfg.sigma_full + span * static_cast<double>(n - i) / static_cast<double>(n - 1);
    }
    return levels;
}

std::vector<double> build_fixed_k_grid(const SchedulerConfig& cfg, int k) {
    cfg.validate();
    if (k < 1) throw ConfigError("fixed_k requires k >= 1, got " + std::to_string(k));
    std::vector<double> levels(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i) {
        levels[static_cast<std::size_t>(i)] =
            cfg.sigma_start * static_cast<double>(k - i) / static_cast<double>(k);
    }
    return levels;
}

std::vector<double> default_depth_fractions() { return {0.04, 0.16, 0.32, 0.48, 0.64, 0.80, 1.00}; }

std::vector<double> build_depth_grid(std::span<const double> fractions) {
    if (fractions.empty()) throw ConfigError("depth grid must not be empty");
    double prev = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("depth fraction out of (0, 1]: " + format_real(f));
        if (!(f > prev)) throw ConfigError("depth fractions must be strictly increasing");
        prev = f;
    }
    return {fractions.begin(), fractions.end()};
}

double grid_step_ratio(std::span<const double> grid, double sigma) {
    // Tolerate products like r * sigma landing one ulp off a grid level.
    const double below = sigma * (1.0 - 1e-9);
    for (double level : grid) {
        if (level < below) return level / sigma;
    }
    return 0.0;
}

}  // namespace sants
