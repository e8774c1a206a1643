#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lenbias {

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// RFC 4180 field quoting: quoted only when the field needs it.
std::string csv_escape(std::string_view field);

/// Splits CSV text into rows of fields, honouring quoted fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Shortest round-trip decimal form of `value`.
std::string format_double(double value);

/// Fixed-point percentage, e.g. 0.5012 -> "50.1".
std::string format_percent(double fraction, int decimals = 1);

}  // namespace lenbias
