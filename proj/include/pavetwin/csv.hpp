#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pavetwin::csv {

struct Table {
    std::string source;                         // file name, for error messages
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // header excluded
    std::vector<std::size_t> line_numbers;       // 1-based file line of each row
};

/// Reads a comma-separated file with a required header row. Blank lines are
/// skipped, a UTF-8 BOM and trailing CR are stripped. Throws MissingFile if the
/// file cannot be opened, SchemaError if the header differs from `expected`
/// or a row has the wrong column count.
Table read(const std::filesystem::path& path, std::span<const std::string_view> expected);

/// Empty, "NA", "NaN" and "null" (any case) count as missing.
bool is_missing(std::string_view field);

std::optional<std::int64_t> parse_int(std::string_view field);
std::optional<double> parse_double(std::string_view field);

/// Shortest decimal representation that round-trips.
std::string format_double(double value);

}  // namespace pavetwin::csv
