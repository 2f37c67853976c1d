#pragma once

#include <span>
#include <vector>

#include "sants/config.hpp"

namespace sants {

/// Reference noise grid for full denoising: n_full + 1 strictly decreasing
/// levels from sigma_start to sigma_full, with levels[1] == sigma_early and a
/// linear ramp from sigma_early down to sigma_full afterwards.
std::vector<double> build_full_grid(const SchedulerConfig& cfg);

/// Fixed k-update baseline grid: k + 1 evenly spaced levels from sigma_start to 0.
std::vector<double> build_fixed_k_grid(const SchedulerConfig& cfg, int k);

/// Depth fractions (1 - sigma) scanned by the offline diagnostic.
std::vector<double> default_depth_fractions();

/// Validates a depth grid: each fraction in (0, 1], strictly increasing.
std::vector<double> build_depth_grid(std::span<const double> fractions);

/// Ratio next/current that the fixed grid would apply from `sigma`: the next
/// grid level strictly below sigma, divided by sigma. Returns 0 when sigma is
/// at or below the last positive level and the grid ends at 0.
double grid_step_ratio(std::span<const double> grid, double sigma);

}  // namespace sants
