#include "pavetwin/records.hpp"

#include "pavetwin/csv.hpp"
#include "pavetwin/errors.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>
#include <utility>

namespace pavetwin {

namespace {

constexpr std::array<std::string_view, 5> kSegmentHeader{"segment_id", "length_m", "material", "age_years",
                                                         "traffic_volume"};
constexpr std::array<std::string_view, 3> kDistressHeader{"segment_id", "month", "distress_level"};
constexpr std::array<std::string_view, 3> kConnectivityHeader{"from_id", "to_id", "weight"};

struct RowReader {
    const csv::Table& table;
    std::size_t row;

    const std::string& field(std::size_t col) const { return table.rows[row][col]; }

    [[noreturn]] void fail(std::size_t col, const std::string& what) const {
        throw ParseError(table.source, table.line_numbers[row], col + 1, what);
    }

    std::int64_t required_int(std::size_t col) const {
        const auto& f = field(col);
        if (csv::is_missing(f)) {
            fail(col, "required value is missing");
        }
        auto v = csv::parse_int(f);
        if (!v) {
            fail(col, "'" + f + "' is not an integer");
        }
        return *v;
    }

    double required_double(std::size_t col) const {
        const auto& f = field(col);
        if (csv::is_missing(f)) {
            fail(col, "required value is missing");
        }
        auto v = csv::parse_double(f);
        if (!v) {
            fail(col, "'" + f + "' is not a number");
        }
        return *v;
    }

    std::optional<double> optional_double(std::size_t col) const {
        const auto& f = field(col);
        if (csv::is_missing(f)) {
            return std::nullopt;
        }
        auto v = csv::parse_double(f);
        if (!v) {
            fail(col, "'" + f + "' is not a number");
        }
        return v;
    }
};

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    return out;
}

}  // namespace

Datasets load_datasets(const std::filesystem::path& segments_path, const std::filesystem::path& distress_path,
                       const std::filesystem::path& connectivity_path) {
    Datasets data;

    const auto seg = csv::read(segments_path, kSegmentHeader);
    data.segments.reserve(seg.rows.size());
    for (std::size_t r = 0; r < seg.rows.size(); ++r) {
        RowReader rd{seg, r};
        SegmentRow row;
        row.segment_id = rd.required_int(0);
        row.length_m = rd.optional_double(1);
        if (!csv::is_missing(rd.field(2))) {
            row.material = rd.field(2);
        }
        row.age_years = rd.optional_double(3);
        row.traffic_volume = rd.optional_double(4);
        data.segments.push_back(std::move(row));
    }

    const auto dis = csv::read(distress_path, kDistressHeader);
    data.distress.reserve(dis.rows.size());
    for (std::size_t r = 0; r < dis.rows.size(); ++r) {
        RowReader rd{dis, r};
        data.distress.push_back({rd.required_int(0), rd.required_int(1), rd.required_double(2)});
    }

    const auto con = csv::read(connectivity_path, kConnectivityHeader);
    data.connectivity.reserve(con.rows.size());
    for (std::size_t r = 0; r < con.rows.size(); ++r) {
        RowReader rd{con, r};
        // A missing weight is kept as NaN so cleaning drops it as an incomplete link.
        const double weight = rd.optional_double(2).value_or(std::nan(""));
        data.connectivity.push_back({rd.required_int(0), rd.required_int(1), weight});
    }
    return data;
}

Datasets load_dataset_dir(const std::filesystem::path& dir) {
    return load_datasets(dir / kSegmentsFile, dir / kDistressFile, dir / kConnectivityFile);
}

void write_segments_csv(const std::filesystem::path& path, std::span<const SegmentRecord> segments) {
    auto out = open_for_write(path);
    out << "segment_id,length_m,material,age_years,traffic_volume\n";
    for (const auto& s : segments) {
        out << s.segment_id << ',' << csv::format_double(s.length_m) << ',' << s.material << ','
            << csv::format_double(s.age_years) << ',' << csv::format_double(s.traffic_volume) << '\n';
    }
}

void write_distress_csv(const std::filesystem::path& path, std::span<const DistressRecord> distress) {
    auto out = open_for_write(path);
    out << "segment_id,month,distress_level\n";
    for (const auto& d : distress) {
        out << d.segment_id << ',' << d.month << ',' << csv::format_double(d.distress_level) << '\n';
    }
}

void write_connectivity_csv(const std::filesystem::path& path, std::span<const ConnectivityRecord> links) {
    auto out = open_for_write(path);
    out << "from_id,to_id,weight\n";
    for (const auto& c : links) {
        out << c.from_id << ',' << c.to_id << ',' << csv::format_double(c.weight) << '\n';
    }
}

void validate_segments(std::span<const SegmentRecord> segments) {
    std::unordered_set<std::int64_t> seen;
    for (const auto& s : segments) {
        const std::string where = "segment " + std::to_string(s.segment_id);
        if (!seen.insert(s.segment_id).second) {
            throw ValidationError("duplicate " + where);
        }
        if (!std::isfinite(s.length_m) || !std::isfinite(s.age_years) || !std::isfinite(s.traffic_volume)) {
            throw ValidationError(where + ": non-finite attribute");
        }
        if (s.length_m <= 0.0) {
            throw ValidationError(where + ": length must be > 0");
        }
        if (s.age_years < 0.0) {
            throw ValidationError(where + ": age must be >= 0");
        }
        if (s.traffic_volume < 0.0) {
            throw ValidationError(where + ": traffic volume must be >= 0");
        }
        if (s.material.empty()) {
            throw ValidationError(where + ": empty material");
        }
    }
}

void validate_distress(std::span<const DistressRecord> distress) {
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& d : distress) {
        const std::string where =
            "distress (segment " + std::to_string(d.segment_id) + ", month " + std::to_string(d.month) + ")";
        if (d.month < 0) {
            throw ValidationError(where + ": negative month");
        }
        if (!(d.distress_level >= 0.0 && d.distress_level <= 100.0)) {
            throw ValidationError(where + ": score outside [0, 100]");
        }
        if (!seen.emplace(d.segment_id, d.month).second) {
            throw ValidationError("duplicate " + where);
        }
    }
}

}  // namespace pavetwin
