#include "pavetwin/errors.hpp"
#include "pavetwin/pipeline.hpp"
#include "pavetwin/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace pavetwin {
namespace {

SegmentRow row(std::int64_t id, std::optional<double> len, std::optional<std::string> mat = "asphalt",
               std::optional<double> age = 1.0, std::optional<double> traffic = 10.0) {
    return {id, len, std::move(mat), age, traffic};
}

TEST(Impute, MedianOfPresentValues) {
    const std::vector<SegmentRow> rows{row(1, 10), row(2, std::nullopt), row(3, 30)};
    const auto out = impute(rows);
    EXPECT_DOUBLE_EQ(out[1].length_m, 20.0);
    EXPECT_DOUBLE_EQ(out[0].length_m, 10.0);
}

TEST(Impute, OddCountTakesMiddle) {
    const std::vector<SegmentRow> rows{row(1, 7), row(2, 1), row(3, std::nullopt), row(4, 100)};
    EXPECT_DOUBLE_EQ(impute(rows)[2].length_m, 7.0);
}

TEST(Impute, MaterialModeWithLexicographicTieBreak) {
    const std::vector<SegmentRow> rows{row(1, 1, "asphalt"), row(2, 1, "asphalt"), row(3, 1, std::nullopt),
                                       row(4, 1, "concrete")};
    EXPECT_EQ(impute(rows)[2].material, "asphalt");
    const std::vector<SegmentRow> tie{row(1, 1, "concrete"), row(2, 1, "composite"), row(3, 1, std::nullopt)};
    EXPECT_EQ(impute(tie)[2].material, "composite");
}

TEST(Impute, CompleteInputUnchanged) {
    const std::vector<SegmentRow> rows{row(1, 5, "a", 2, 3), row(2, 6, "b", 4, 5)};
    const auto out = impute(rows);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], (SegmentRecord{1, 5, "a", 2, 3}));
    EXPECT_EQ(out[1], (SegmentRecord{2, 6, "b", 4, 5}));
}

TEST(Impute, AllMissingColumnThrows) {
    const std::vector<SegmentRow> rows{row(1, std::nullopt), row(2, std::nullopt)};
    EXPECT_THROW(impute(rows), AllMissing);
    const std::vector<SegmentRow> mats{row(1, 1, std::nullopt)};
    EXPECT_THROW(impute(mats), AllMissing);
}

TEST(LabelEncoder, LexicographicCodes) {
    const std::vector<std::string> cats{"concrete", "asphalt", "composite", "asphalt"};
    const auto enc = LabelEncoder::fit(cats);
    EXPECT_EQ(enc.encode("asphalt"), 0);
    EXPECT_EQ(enc.encode("composite"), 1);
    EXPECT_EQ(enc.encode("concrete"), 2);
    EXPECT_EQ(enc.decode(2), "concrete");
    EXPECT_THROW(enc.encode("steel"), UnknownCategory);
    EXPECT_THROW(enc.decode(3), UnknownCategory);
}

TEST(LabelEncoder, SingleCategoryAndUnfitted) {
    const std::vector<std::string> cats{"gravel"};
    EXPECT_EQ(LabelEncoder::fit(cats).encode("gravel"), 0);
    LabelEncoder empty;
    EXPECT_THROW(empty.encode("gravel"), NotFitted);
    EXPECT_THROW(LabelEncoder::from_categories({"b", "a"}), ConfigError);
}

TEST(FeatureScaler, PopulationZScore) {
    Matrix x(3, 2);
    for (std::size_t i = 0; i < 3; ++i) {
        x(i, 0) = static_cast<double>(i + 1);
        x(i, 1) = 5.0;
    }
    const auto s = FeatureScaler::fit(x);
    const auto z = s.transform(x);
    const double expected = 1.0 / std::sqrt(2.0 / 3.0);
    EXPECT_NEAR(z(0, 0), -expected, 1e-15);
    EXPECT_NEAR(z(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(z(2, 0), expected, 1e-15);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(z(i, 1), 0.0);
    }
}

TEST(FeatureScaler, RandomColumnsStandardized) {
    Rng rng(11);
    Matrix x(500, 4);
    for (std::size_t i = 0; i < 500; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            x(i, j) = rng.normal(10.0 * static_cast<double>(j), 1.0 + static_cast<double>(j) * 100.0);
        }
    }
    const auto z = FeatureScaler::fit(x).transform(x);
    for (std::size_t j = 0; j < 4; ++j) {
        long double sum = 0, sq = 0;
        for (std::size_t i = 0; i < 500; ++i) {
            sum += z(i, j);
        }
        const long double mean = sum / 500;
        for (std::size_t i = 0; i < 500; ++i) {
            sq += (z(i, j) - mean) * (z(i, j) - mean);
        }
        EXPECT_NEAR(static_cast<double>(mean), 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(static_cast<double>(sq / 500)), 1.0, 1e-9);
    }
}

TEST(FeatureScaler, Errors) {
    FeatureScaler s;
    EXPECT_THROW(s.transform(Matrix(2, 2)), NotFitted);
    const auto fitted = FeatureScaler::fit(Matrix(3, 4));
    EXPECT_THROW(fitted.transform(Matrix(3, 3)), DimensionError);
}

TEST(RawFeatures, ColumnOrder) {
    const std::vector<SegmentRecord> segs{{1, 100, "concrete", 5, 250}, {2, 50, "asphalt", 1, 20}};
    const std::vector<std::string> cats{"asphalt", "concrete"};
    const auto x = raw_feature_matrix(segs, LabelEncoder::fit(cats));
    ASSERT_EQ(x.cols(), kFeatureCount);
    EXPECT_EQ(x(0, 0), 100.0);
    EXPECT_EQ(x(0, 1), 5.0);
    EXPECT_EQ(x(0, 2), 250.0);
    EXPECT_EQ(x(0, 3), 1.0);
    EXPECT_EQ(x(1, 3), 0.0);
}

TEST(SplitNodes, SizesAndPartition) {
    const auto s = split_nodes(1000);
    EXPECT_EQ(s.train.size(), 800u);
    EXPECT_EQ(s.test.size(), 200u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 1000u);
    EXPECT_EQ(*all.rbegin(), 999u);

    const auto small = split_nodes(5);
    EXPECT_EQ(small.train.size(), 4u);
    EXPECT_EQ(small.test.size(), 1u);
}

TEST(SplitNodes, DeterministicAndSeedSensitive) {
    const auto a = split_nodes(100, 7);
    const auto b = split_nodes(100, 7);
    const auto c = split_nodes(100, 8);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(a.train, c.train);
}

TEST(SplitNodes, ClampsToNonEmptySides) {
    const auto lo = split_nodes(10, 1, 0.01);
    EXPECT_EQ(lo.train.size(), 1u);
    const auto hi = split_nodes(10, 1, 0.99);
    EXPECT_EQ(hi.test.size(), 1u);
    EXPECT_THROW(split_nodes(1), ConfigError);
}

TEST(SplitNodes, FisherYatesOracle) {
    // Independent shuffle with the same generator: i from N-1 down, j uniform in [0, i].
    const std::size_t n = 37;
    Rng rng(99);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    const auto s = split_nodes(n, 99);
    const std::size_t k = s.train.size();
    EXPECT_EQ(s.train, std::vector<std::size_t>(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k)));
    EXPECT_EQ(s.test, std::vector<std::size_t>(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end()));
}

}  // namespace
}  // namespace pavetwin
