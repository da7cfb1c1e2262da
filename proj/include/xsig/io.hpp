#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xsig::io {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Whole-string decimal parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

std::string read_file(const std::filesystem::path& path);
/// Writes bytes verbatim, creating parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);

}  // namespace xsig::io
