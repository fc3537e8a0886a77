#include "pavetwin/csv.hpp"

#include "pavetwin/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace pavetwin::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::string_view field =
            comma == std::string_view::npos ? line.substr(start) : line.substr(start, comma - start);
        fields.emplace_back(trim(field));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

std::string join(std::span<const std::string_view> parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        out += parts[i];
    }
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

Table read(const std::filesystem::path& path, std::span<const std::string_view> expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    Table table;
    table.source = path.filename().string();

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split(line);
        if (!have_header) {
            const bool matches = fields.size() == expected.size() &&
                                 std::equal(fields.begin(), fields.end(), expected.begin());
            if (!matches) {
                throw SchemaError(table.source + ": expected header '" + join(expected) + "', got '" + line + "'");
            }
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != expected.size()) {
            throw SchemaError(table.source + ": line " + std::to_string(line_no) + " has " +
                              std::to_string(fields.size()) + " columns, expected " +
                              std::to_string(expected.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) {
        throw SchemaError(table.source + ": missing header row");
    }
    return table;
}

bool is_missing(std::string_view field) {
    return field.empty() || iequals(field, "na") || iequals(field, "nan") || iequals(field, "null");
}

std::optional<std::int64_t> parse_int(std::string_view field) {
    std::int64_t value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        return std::nullopt;
    }
    return value;
}

std::optional<double> parse_double(std::string_view field) {
    double value = 0.0;
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        return std::nullopt;
    }
    return value;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace pavetwin::csv
