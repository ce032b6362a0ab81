#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace colat {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Parse a full string as a double; throws FormatError with `context` in the
/// message on trailing garbage or empty input.
double parse_double(std::string_view text, std::string_view context);

/// Write via a temporary file in the same directory plus rename, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace colat
