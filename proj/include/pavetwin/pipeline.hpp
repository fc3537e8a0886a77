#pragma once

#include "pavetwin/matrix.hpp"
#include "pavetwin/records.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pavetwin {

/// Feature column order used everywhere a segment becomes a feature row.
inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{"length_m", "age_years",
                                                                           "traffic_volume", "material_code"};

/// Fills missing attributes: numeric columns with the column median (mean of
/// the two middle values for even counts), material with the most frequent
/// value (lexicographically smallest on ties). Throws AllMissing(column).
std::vector<SegmentRecord> impute(std::span<const SegmentRow> rows);

/// Lexicographically ordered category codes 0..K-1.
class LabelEncoder {
public:
    LabelEncoder() = default;

    static LabelEncoder fit(std::span<const std::string> categories);
    static LabelEncoder from_categories(std::vector<std::string> sorted_unique);

    bool fitted() const noexcept { return fitted_; }
    /// Throws NotFitted, UnknownCategory.
    std::int64_t encode(const std::string& category) const;
    /// Throws NotFitted, UnknownCategory.
    const std::string& decode(std::int64_t code) const;
    const std::vector<std::string>& categories() const noexcept { return categories_; }

    friend bool operator==(const LabelEncoder&, const LabelEncoder&) = default;

private:
    std::vector<std::string> categories_;
    bool fitted_ = false;
};

/// Per-column z-score with population standard deviation.
class FeatureScaler {
public:
    FeatureScaler() = default;

    static FeatureScaler fit(const Matrix& columns);
    static FeatureScaler from_moments(std::vector<double> means, std::vector<double> sds);

    bool fitted() const noexcept { return fitted_; }
    /// (x - mean) / sd per column; constant columns (sd == 0) become 0.
    /// Throws NotFitted, DimensionError.
    Matrix transform(const Matrix& x) const;

    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& sds() const noexcept { return sds_; }

    friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;

private:
    std::vector<double> means_;
    std::vector<double> sds_;
    bool fitted_ = false;
};

/// Unscaled N x 4 feature matrix in kFeatureNames order.
Matrix raw_feature_matrix(std::span<const SegmentRecord> segments, const LabelEncoder& encoder);

struct NodeSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    double fraction = 0.8;
};

/// Seeded Fisher-Yates shuffle of 0..N-1; the first round(fraction * N)
/// indices (kept within [1, N-1]) are the training set. Throws ConfigError if N < 2.
NodeSplit split_nodes(std::size_t n, std::uint64_t seed = 42, double fraction = 0.8);

}  // namespace pavetwin
