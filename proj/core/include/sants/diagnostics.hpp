#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sants/reward.hpp"
#include "sants/testbed.hpp"
#include "sants/trajectory.hpp"

namespace sants {

/// Rows are episodes, columns are depth fractions. Entries are masked action
/// errors divided by the row's first entry.
struct ScanMatrix {
    std::vector<double> depths;
    std::vector<std::uint64_t> seeds;
    std::vector<Phase> phases;
    std::vector<Corruption> corruptions;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> valid;

    std::size_t rows() const { return values.size(); }
    std::size_t cols() const { return depths.size(); }
    bool complete(std::size_t r) const;

    /// Appends one row, normalizing by its first valid entry; non-finite or
    /// negative raw values and rows with a zero first entry are marked invalid.
    void add_row(std::uint64_t seed, Phase phase, Corruption corruption, std::span<const double> raw);

    /// Empty string when consistent, else the first violated invariant.
    std::string check_invariants() const;
};

/// Runs the full grid once per episode and records the error at the first
/// level whose depth 1 - sigma reaches each fraction.
ScanMatrix depth_scan(const SyntheticPolicy& policy, std::span<const EpisodeSpec> episodes,
                      std::span<const double> depth_fractions, const SchedulerConfig& sched,
                      const RewardConfig& reward, int workers = 1);

/// Index of the first full-grid level with 1 - level >= depth.
std::size_t depth_level_index(std::span<const double> grid, double depth);

struct PhaseCurve {
    Phase phase = Phase::Coarse;
    int rows = 0;
    std::vector<double> mean;
    std::vector<double> sem;  // sample standard deviation / sqrt(rows)
};

std::vector<PhaseCurve> phase_curves(const ScanMatrix& m, std::vector<std::string>* warnings = nullptr);

struct ScanStats {
    std::string label;  // "coarse", "fine" or "all"
    int rows = 0;
    double not_best_at_full_rate = 0.0;
    double adjacent_increase_rate = 0.0;
    std::vector<int> best_depth_histogram;
    double oracle_mean = 0.0;
    double fixed_full_mean = 0.0;
};

/// Statistics over complete rows: one entry per phase that has any, then "all".
/// Argmin ties resolve to the shallowest depth. Throws if no row is complete.
std::vector<ScanStats> scan_stats(const ScanMatrix& m);

/// Shallowest column index attaining the row minimum.
std::size_t best_depth(std::span<const double> row);

std::string scan_matrix_csv(const ScanMatrix& m);
ScanMatrix parse_scan_matrix_csv(std::string_view text);
std::string phase_curves_csv(std::span<const double> depths, std::span<const PhaseCurve> curves);
std::string scan_stats_csv(std::span<const ScanStats> stats);

/// Per-step trace of deployed runs: terminal depth, update counts, and each
/// decision's sigma, stop CDF and ratio.
std::string export_traces(std::span<const NoiseTrajectory> runs, std::span<const std::uint64_t> seeds = {});

}  // namespace sants
