#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pilot::detail {

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower_ascii(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix) noexcept;

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::string hex64(std::uint64_t v);

// Whole-file IO; both throw Error(io).
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Fixed-point with up to `digits` fractional digits, trailing zeros trimmed.
std::string format_fixed(double value, int digits);

}  // namespace pilot::detail
