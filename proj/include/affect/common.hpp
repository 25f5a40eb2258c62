#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace affect {

inline constexpr std::string_view kVersion = "0.3.0";

// Field escaping for the line-oriented TSV formats: tab -> \t, newline -> \n,
// backslash -> \\. Unknown escape sequences are kept verbatim on read.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

std::vector<std::string> split_tabs(std::string_view line);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace affect
