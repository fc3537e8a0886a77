#pragma once

#include "pavetwin/matrix.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pavetwin {

enum class BaselineKind { Linear, Knn, DecisionTree, RandomForest, GradientBoosting, SvrLinear };

inline constexpr std::array<BaselineKind, 6> kAllBaselines{
    BaselineKind::RandomForest, BaselineKind::GradientBoosting, BaselineKind::Linear,
    BaselineKind::SvrLinear,    BaselineKind::Knn,              BaselineKind::DecisionTree};

/// Display name used in report tables ("Random Forest", ...).
std::string_view display_name(BaselineKind kind) noexcept;
/// Short identifier ("random_forest", ...).
std::string_view kind_id(BaselineKind kind) noexcept;

struct BaselineSpec {
    BaselineKind kind = BaselineKind::Linear;

    std::size_t knn_k = 5;

    // 0 = unlimited depth.
    std::size_t tree_max_depth = 0;
    std::size_t min_samples_leaf = 1;

    std::size_t forest_trees = 100;
    std::size_t forest_max_features = 2;

    std::size_t boosting_stages = 100;
    double boosting_learning_rate = 0.1;
    std::size_t boosting_depth = 3;

    double svr_epsilon = 0.1;
    double svr_c = 1.0;
    std::size_t svr_passes = 1000;
    double svr_step = 1e-3;

    double ridge_fallback = 1e-8;

    std::uint64_t seed = 42;

    /// Throws ConfigError.
    void validate() const;
};

/// A regressor on tabular rows. `predict` before `fit` throws NotFitted;
/// a column-count mismatch throws DimensionError.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual void fit(const Matrix& x, std::span<const double> y) = 0;
    virtual std::vector<double> predict(const Matrix& x) const = 0;
    virtual BaselineKind kind() const noexcept = 0;
};

std::unique_ptr<Regressor> make_baseline(const BaselineSpec& spec);

// --- concrete models exposed for tests ---------------------------------------------

/// Ordinary least squares with intercept via the normal equations; a singular
/// Gram matrix is retried with `ridge` added to its diagonal.
class LinearRegression final : public Regressor {
public:
    explicit LinearRegression(double ridge = 1e-8) : ridge_(ridge) {}
    void fit(const Matrix& x, std::span<const double> y) override;
    std::vector<double> predict(const Matrix& x) const override;
    BaselineKind kind() const noexcept override { return BaselineKind::Linear; }

    const std::vector<double>& coefficients() const noexcept { return coef_; }
    double intercept() const noexcept { return intercept_; }

private:
    double ridge_;
    std::vector<double> coef_;
    double intercept_ = 0.0;
    bool fitted_ = false;
};

/// CART regression tree (variance reduction). Split candidates are midpoints
/// between consecutive distinct values; the scan visits features in order and
/// keeps the first best split.
class RegressionTree final : public Regressor {
public:
    struct Options {
        std::size_t max_depth = 0;  // 0 = unlimited
        std::size_t min_samples_leaf = 1;
        std::size_t max_features = 0;  // 0 = all
    };

    RegressionTree() = default;
    RegressionTree(Options options, std::uint64_t seed) : options_(options), seed_(seed) {}

    void fit(const Matrix& x, std::span<const double> y) override;
    /// Fit on a multiset of rows (bootstrap samples).
    void fit_rows(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows);
    std::vector<double> predict(const Matrix& x) const override;
    double predict_row(std::span<const double> row) const;
    BaselineKind kind() const noexcept override { return BaselineKind::DecisionTree; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t depth() const noexcept;

private:
    struct Node {
        int feature = -1;  // -1 = leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;
    };

    Options options_{};
    std::uint64_t seed_ = 0;
    std::size_t n_features_ = 0;
    std::vector<Node> nodes_;
};

}  // namespace pavetwin
