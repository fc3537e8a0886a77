#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pavetwin {

/// A segment row as read from segments.csv; attribute columns may be missing
/// and are filled by `impute`.
struct SegmentRow {
    std::int64_t segment_id = 0;
    std::optional<double> length_m;
    std::optional<std::string> material;
    std::optional<double> age_years;
    std::optional<double> traffic_volume;

    friend bool operator==(const SegmentRow&, const SegmentRow&) = default;
};

/// A complete segment: length in meters, age in years, traffic in vehicles/day.
struct SegmentRecord {
    std::int64_t segment_id = 0;
    double length_m = 0.0;
    std::string material;
    double age_years = 0.0;
    double traffic_volume = 0.0;

    friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

/// Monthly condition score, PCI convention (100 = perfect surface).
struct DistressRecord {
    std::int64_t segment_id = 0;
    std::int64_t month = 0;
    double distress_level = 0.0;

    friend bool operator==(const DistressRecord&, const DistressRecord&) = default;
};

struct ConnectivityRecord {
    std::int64_t from_id = 0;
    std::int64_t to_id = 0;
    double weight = 1.0;

    friend bool operator==(const ConnectivityRecord&, const ConnectivityRecord&) = default;
};

struct Datasets {
    std::vector<SegmentRow> segments;
    std::vector<DistressRecord> distress;
    std::vector<ConnectivityRecord> connectivity;
};

inline constexpr std::string_view kSegmentsFile = "segments.csv";
inline constexpr std::string_view kDistressFile = "distress.csv";
inline constexpr std::string_view kConnectivityFile = "connectivity.csv";

/// Parses the three CSV files, preserving row order. Semantics (self-loops,
/// unknown ids, ranges) are not checked here.
/// Throws MissingFile, SchemaError, ParseError.
Datasets load_datasets(const std::filesystem::path& segments_path, const std::filesystem::path& distress_path,
                       const std::filesystem::path& connectivity_path);

/// load_datasets on the standard file names inside `dir`.
Datasets load_dataset_dir(const std::filesystem::path& dir);

void write_segments_csv(const std::filesystem::path& path, std::span<const SegmentRecord> segments);
void write_distress_csv(const std::filesystem::path& path, std::span<const DistressRecord> distress);
void write_connectivity_csv(const std::filesystem::path& path, std::span<const ConnectivityRecord> links);

/// Unique ids, length > 0, age >= 0, traffic >= 0, all finite. Throws ValidationError.
void validate_segments(std::span<const SegmentRecord> segments);
/// Scores within [0, 100], month >= 0, (segment, month) unique. Throws ValidationError.
void validate_distress(std::span<const DistressRecord> distress);

}  // namespace pavetwin
