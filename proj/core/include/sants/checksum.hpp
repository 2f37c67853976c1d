#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

namespace sants {

std::uint32_t crc32(std::span<const std::byte> bytes);
std::uint32_t crc32(std::string_view text);
std::uint32_t crc32_file(const std::filesystem::path& path);

/// Writes `contents` to `path` via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sants
