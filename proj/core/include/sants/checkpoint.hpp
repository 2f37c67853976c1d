#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sants/scheduler_net.hpp"

namespace sants {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: "SANTSNET" magic, u32 format version, activation tag,
/// u32 layer widths, u64 parameter count, little-endian f64 parameters in
/// declared order, u32 CRC-32 trailer over all preceding bytes.
std::string serialize_checkpoint(const SchedulerNet& net);
SchedulerNet parse_checkpoint(std::string_view bytes, const std::optional<NetShape>& expected = std::nullopt);

/// Atomic write (temp file, then rename).
void save_checkpoint(const std::filesystem::path& path, const SchedulerNet& net);

/// Throws DataError on bad magic, version, activation, dimensions or checksum.
SchedulerNet load_checkpoint(const std::filesystem::path& path,
                             const std::optional<NetShape>& expected = std::nullopt);

}  // namespace sants
