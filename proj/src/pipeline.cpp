#include "pavetwin/pipeline.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

namespace pavetwin {

namespace {

template <class Get>
double column_median(std::span<const SegmentRow> rows, Get get, const char* name) {
    std::vector<double> present;
    present.reserve(rows.size());
    for (const auto& r : rows) {
        if (const std::optional<double>& v = get(r)) {
            present.push_back(*v);
        }
    }
    if (present.empty()) {
        throw AllMissing(name);
    }
    std::sort(present.begin(), present.end());
    const std::size_t n = present.size();
    if (n % 2 == 1) {
        return present[n / 2];
    }
    return 0.5 * (present[n / 2 - 1] + present[n / 2]);
}

std::string column_mode(std::span<const SegmentRow> rows) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : rows) {
        if (r.material) {
            ++counts[*r.material];
        }
    }
    if (counts.empty()) {
        throw AllMissing("material");
    }
    // std::map iterates in lexicographic order, so strict > keeps the smallest on ties.
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) {
            best = it;
        }
    }
    return best->first;
}

}  // namespace

std::vector<SegmentRecord> impute(std::span<const SegmentRow> rows) {
    std::vector<SegmentRecord> out;
    out.reserve(rows.size());
    if (rows.empty()) {
        return out;
    }
    const bool any_length = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.length_m; });
    const bool any_age = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.age_years; });
    const bool any_traffic =
        std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.traffic_volume; });
    const bool any_material = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.material; });

    const double length_fill =
        any_length ? column_median(rows, [](const SegmentRow& r) -> const auto& { return r.length_m; }, "length_m")
                   : 0.0;
    const double age_fill =
        any_age ? column_median(rows, [](const SegmentRow& r) -> const auto& { return r.age_years; }, "age_years")
                : 0.0;
    const double traffic_fill =
        any_traffic ? column_median(
                          rows, [](const SegmentRow& r) -> const auto& { return r.traffic_volume; }, "traffic_volume")
                    : 0.0;
    const std::string material_fill = any_material ? column_mode(rows) : std::string{};

    for (const auto& r : rows) {
        out.push_back({r.segment_id, r.length_m.value_or(length_fill), r.material.value_or(material_fill),
                       r.age_years.value_or(age_fill), r.traffic_volume.value_or(traffic_fill)});
    }
    return out;
}

// --- LabelEncoder ----------------------------------------------------------------

LabelEncoder LabelEncoder::fit(std::span<const std::string> categories) {
    std::vector<std::string> unique(categories.begin(), categories.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    return from_categories(std::move(unique));
}

LabelEncoder LabelEncoder::from_categories(std::vector<std::string> sorted_unique) {
    if (!std::is_sorted(sorted_unique.begin(), sorted_unique.end()) ||
        std::adjacent_find(sorted_unique.begin(), sorted_unique.end()) != sorted_unique.end()) {
        throw ConfigError("encoder categories must be sorted and unique");
    }
    LabelEncoder enc;
    enc.categories_ = std::move(sorted_unique);
    enc.fitted_ = true;
    return enc;
}

std::int64_t LabelEncoder::encode(const std::string& category) const {
    if (!fitted_) {
        throw NotFitted("LabelEncoder");
    }
    auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
    if (it == categories_.end() || *it != category) {
        throw UnknownCategory(category);
    }
    return static_cast<std::int64_t>(it - categories_.begin());
}

const std::string& LabelEncoder::decode(std::int64_t code) const {
    if (!fitted_) {
        throw NotFitted("LabelEncoder");
    }
    if (code < 0 || static_cast<std::size_t>(code) >= categories_.size()) {
        throw UnknownCategory("code " + std::to_string(code));
    }
    return categories_[static_cast<std::size_t>(code)];
}

// --- FeatureScaler ---------------------------------------------------------------

FeatureScaler FeatureScaler::fit(const Matrix& columns) {
    const std::size_t n = columns.rows();
    const std::size_t d = columns.cols();
    if (n == 0) {
        throw EmptyInput();
    }
    std::vector<double> means(d, 0.0);
    std::vector<double> sds(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            sum += columns(r, c);
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dev = columns(r, c) - mean;
            ss += dev * dev;
        }
        means[c] = mean;
        sds[c] = std::sqrt(ss / static_cast<double>(n));
    }
    return from_moments(std::move(means), std::move(sds));
}

FeatureScaler FeatureScaler::from_moments(std::vector<double> means, std::vector<double> sds) {
    if (means.size() != sds.size()) {
        throw DimensionError("scaler means/sds length mismatch");
    }
    for (std::size_t i = 0; i < sds.size(); ++i) {
        if (!std::isfinite(means[i]) || !std::isfinite(sds[i]) || sds[i] < 0.0) {
            throw ConfigError("scaler moments must be finite with sd >= 0");
        }
    }
    FeatureScaler s;
    s.means_ = std::move(means);
    s.sds_ = std::move(sds);
    s.fitted_ = true;
    return s;
}

Matrix FeatureScaler::transform(const Matrix& x) const {
    if (!fitted_) {
        throw NotFitted("FeatureScaler");
    }
    if (x.cols() != means_.size()) {
        throw DimensionError("scaler fitted on " + std::to_string(means_.size()) + " columns, got " +
                             std::to_string(x.cols()));
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            out(r, c) = sds_[c] > 0.0 ? (x(r, c) - means_[c]) / sds_[c] : 0.0;
        }
    }
    return out;
}

Matrix raw_feature_matrix(std::span<const SegmentRecord> segments, const LabelEncoder& encoder) {
    Matrix x(segments.size(), kFeatureCount);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        x(i, 0) = s.length_m;
        x(i, 1) = s.age_years;
        x(i, 2) = s.traffic_volume;
        x(i, 3) = static_cast<double>(encoder.encode(s.material));
    }
    return x;
}

NodeSplit split_nodes(std::size_t n, std::uint64_t seed, double fraction) {
    if (n < 2) {
        throw ConfigError("split_nodes needs at least 2 nodes, got " + std::to_string(n));
    }
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(order[i], order[j]);
    }
    auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

    NodeSplit split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    split.seed = seed;
    split.fraction = fraction;
    return split;
}

}  // namespace pavetwin
