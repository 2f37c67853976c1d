#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sants/testbed.hpp"

namespace sants {

/// Episode split file: one JSON object per line with seed, phase, corruption
/// and the dimensions the episode was generated for.
std::string serialize_episodes(const std::vector<EpisodeSpec>& episodes, const TestbedConfig& cfg);
std::vector<EpisodeSpec> parse_episodes(std::string_view text, const SyntheticPolicy& policy);

void save_episodes(const std::filesystem::path& path, const std::vector<EpisodeSpec>& episodes,
                   const TestbedConfig& cfg);
std::vector<EpisodeSpec> load_episodes(const std::filesystem::path& path, const SyntheticPolicy& policy);

/// `count` episodes whose seeds come from the named substream of `run_seed`.
std::vector<EpisodeSpec> sample_split(const SyntheticPolicy& policy, std::uint64_t run_seed,
                                      std::string_view split, int count);

}  // namespace sants
