#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sants/config.hpp"
#include "sants/reward.hpp"
#include "sants/testbed.hpp"
#include "sants/trainer.hpp"

namespace sants {

struct DiagnosticsConfig {
    int scan_episodes = 500;
    std::vector<double> depth_fractions;  // empty selects the default seven depths
    int rollout_episodes = 100;
    int validation_episodes = 200;
    int eval_episodes = 500;
    int fixed_k = 5;

    void validate() const;
    std::vector<double> depths() const;
};

void read_diagnostics_config(KeyValueDocument& doc, DiagnosticsConfig& cfg);
std::string to_key_value_text(const DiagnosticsConfig& cfg);

/// Every module's settings plus the single run seed.
struct RunConfig {
    std::uint64_t seed = 20240601;
    SchedulerConfig scheduler;
    TestbedConfig testbed;
    RewardConfig reward;
    TrainerConfig trainer;
    DiagnosticsConfig diagnostics;

    /// Cross-module consistency (feature widths, anchor levels).
    void validate() const;
};

/// Loads an optional key-value file, applies `overrides` (later wins), and
/// rejects unknown keys. The trainer seed is taken from `run.seed`.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::map<std::string, std::string>& overrides = {});

RunConfig parse_run_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});

/// Complete snapshot; parsing it back reproduces the same RunConfig.
std::string to_key_value_text(const RunConfig& cfg);

}  // namespace sants
