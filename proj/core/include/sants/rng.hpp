#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sants {

using Rng = std::mt19937_64;

/// Deterministic named substream seed: every random quantity in a run is
/// drawn from `derive_seed(run_seed, "<stream>", index)`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t base, std::string_view stream, std::uint64_t index = 0) {
    return Rng(derive_seed(base, stream, index));
}

}  // namespace sants
