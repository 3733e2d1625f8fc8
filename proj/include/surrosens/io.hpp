#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace surrosens {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Parses a full field as a double; false on any leftover characters.
bool parse_double(std::string_view text, double& out);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t digest);

}  // namespace surrosens
