#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sants/action.hpp"
#include "sants/config.hpp"
#include "sants/reward.hpp"
#include "sants/testbed.hpp"

namespace sants::testing {

inline constexpr std::uint64_t kSeed = 20240601;

inline const SyntheticPolicy& default_policy() {
    static const SyntheticPolicy policy(TestbedConfig{}, kSeed);
    return policy;
}

/// Episode with the requested labels, built from seed `start`.
inline EpisodeSpec find_episode(Phase phase, Corruption corruption, std::uint64_t start = 1) {
    const auto& policy = default_policy();
    return policy.make_episode(start, phase, corruption);
}

/// Random chunk of length T with unit quaternions and grippers in [0, 1].
inline ActionChunk random_chunk(std::mt19937_64& rng, int T = 16, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ActionStep> steps(static_cast<std::size_t>(T));
    for (auto& s : steps) {
        s.position = scale * Eigen::Vector3d(n(rng), n(rng), n(rng));
        s.orientation = Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng));
        s.gripper = u(rng);
    }
    return ActionChunk(std::move(steps));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("sants_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace sants::testing
