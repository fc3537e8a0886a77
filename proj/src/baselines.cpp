#include "pavetwin/baselines.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace pavetwin {

namespace {

void check_training_data(const Matrix& x, std::span<const double> y) {
    if (x.rows() != y.size()) {
        throw DimensionError(std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) + " targets");
    }
    if (y.empty()) {
        throw EmptyInput();
    }
}

void check_predict_input(bool fitted, const char* name, std::size_t expected_cols, const Matrix& x) {
    if (!fitted) {
        throw NotFitted(name);
    }
    if (x.cols() != expected_cols) {
        throw DimensionError(std::string(name) + " fitted on " + std::to_string(expected_cols) +
                             " features, got " + std::to_string(x.cols()));
    }
}

/// Solves A x = b in place with partial pivoting; nullopt when a pivot is
/// negligible relative to the matrix scale.
std::optional<std::vector<double>> solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    double scale = 0.0;
    for (double v : a) {
        scale = std::max(scale, std::abs(v));
    }
    const double tiny = std::max(scale, 1.0) * 1e-13;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot * n + col]) <= tiny) {
            return std::nullopt;
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[pivot * n + c]);
            }
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = col; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) {
            acc -= a[i * n + c] * x[c];
        }
        x[i] = acc / a[i * n + i];
    }
    return x;
}

// --- k nearest neighbours ---------------------------------------------------------

class KnnRegressor final : public Regressor {
public:
    explicit KnnRegressor(std::size_t k) : k_(k) {}

    void fit(const Matrix& x, std::span<const double> y) override {
        check_training_data(x, y);
        x_ = x;
        y_.assign(y.begin(), y.end());
        fitted_ = true;
    }

    std::vector<double> predict(const Matrix& x) const override {
        check_predict_input(fitted_, "KnnRegressor", x_.cols(), x);
        const std::size_t n = x_.rows();
        const std::size_t k = std::min(k_, n);
        std::vector<std::pair<double, std::size_t>> dist(n);
        std::vector<double> out(x.rows());
        for (std::size_t q = 0; q < x.rows(); ++q) {
            for (std::size_t i = 0; i < n; ++i) {
                double d2 = 0.0;
                for (std::size_t c = 0; c < x.cols(); ++c) {
                    const double diff = x(q, c) - x_(i, c);
                    d2 += diff * diff;
                }
                dist[i] = {d2, i};
            }
            // pair ordering breaks distance ties by the lower row index.
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                acc += y_[dist[j].second];
            }
            out[q] = acc / static_cast<double>(k);
        }
        return out;
    }

    BaselineKind kind() const noexcept override { return BaselineKind::Knn; }

private:
    std::size_t k_;
    Matrix x_;
    std::vector<double> y_;
    bool fitted_ = false;
};

// --- decision tree wrapper ---------------------------------------------------------

class DecisionTreeRegressor final : public Regressor {
public:
    DecisionTreeRegressor(RegressionTree::Options options, std::uint64_t seed) : tree_(options, seed) {}
    void fit(const Matrix& x, std::span<const double> y) override {
        check_training_data(x, y);
        tree_.fit(x, y);
    }
    std::vector<double> predict(const Matrix& x) const override { return tree_.predict(x); }
    BaselineKind kind() const noexcept override { return BaselineKind::DecisionTree; }

private:
    RegressionTree tree_;
};

// --- random forest -----------------------------------------------------------------

class RandomForestRegressor final : public Regressor {
public:
    explicit RandomForestRegressor(const BaselineSpec& spec) : spec_(spec) {}

    void fit(const Matrix& x, std::span<const double> y) override {
        check_training_data(x, y);
        trees_.clear();
        trees_.reserve(spec_.forest_trees);
        const std::size_t n = x.rows();
        std::vector<std::size_t> sample(n);
        for (std::size_t t = 0; t < spec_.forest_trees; ++t) {
            // Per-tree streams depend only on (seed, tree index).
            Rng bootstrap = Rng::stream(spec_.seed, 2 * t);
            for (auto& s : sample) {
                s = static_cast<std::size_t>(bootstrap.below(n));
            }
            const RegressionTree::Options opts{spec_.tree_max_depth, spec_.min_samples_leaf, spec_.forest_max_features};
            RegressionTree tree(opts, Rng::stream(spec_.seed, 2 * t + 1).next_u64());
            tree.fit_rows(x, y, sample);
            trees_.push_back(std::move(tree));
        }
        n_features_ = x.cols();
    }

    std::vector<double> predict(const Matrix& x) const override {
        check_predict_input(!trees_.empty(), "RandomForestRegressor", n_features_, x);
        std::vector<double> out(x.rows(), 0.0);
        for (const auto& tree : trees_) {
            for (std::size_t i = 0; i < x.rows(); ++i) {
                out[i] += tree.predict_row(x.row(i));
            }
        }
        for (double& v : out) {
            v /= static_cast<double>(trees_.size());
        }
        return out;
    }

    BaselineKind kind() const noexcept override { return BaselineKind::RandomForest; }

private:
    BaselineSpec spec_;
    std::vector<RegressionTree> trees_;
    std::size_t n_features_ = 0;
};

// --- gradient boosting ---------------------------------------------------------------

class GradientBoostingRegressor final : public Regressor {
public:
    explicit GradientBoostingRegressor(const BaselineSpec& spec) : spec_(spec) {}

    void fit(const Matrix& x, std::span<const double> y) override {
        check_training_data(x, y);
        const std::size_t n = y.size();
        init_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        std::vector<double> current(n, init_);
        std::vector<double> residual(n);
        stages_.clear();
        for (std::size_t s = 0; s < spec_.boosting_stages; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                residual[i] = y[i] - current[i];
            }
            RegressionTree tree({spec_.boosting_depth, spec_.min_samples_leaf, 0}, spec_.seed);
            tree.fit(x, residual);
            for (std::size_t i = 0; i < n; ++i) {
                current[i] += spec_.boosting_learning_rate * tree.predict_row(x.row(i));
            }
            stages_.push_back(std::move(tree));
        }
        n_features_ = x.cols();
        fitted_ = true;
    }

    std::vector<double> predict(const Matrix& x) const override {
        check_predict_input(fitted_, "GradientBoostingRegressor", n_features_, x);
        std::vector<double> out(x.rows(), init_);
        for (const auto& tree : stages_) {
            for (std::size_t i = 0; i < x.rows(); ++i) {
                out[i] += spec_.boosting_learning_rate * tree.predict_row(x.row(i));
            }
        }
        return out;
    }

    BaselineKind kind() const noexcept override { return BaselineKind::GradientBoosting; }

private:
    BaselineSpec spec_;
    double init_ = 0.0;
    std::vector<RegressionTree> stages_;
    std::size_t n_features_ = 0;
    bool fitted_ = false;
};

// --- linear epsilon-insensitive SVR ----------------------------------------------------

// Minimizes 0.5*|w|^2 + C * sum_i max(0, |y_i - w.x_i - b| - eps) with
// per-sample subgradient steps in row order.
class LinearSvr final : public Regressor {
public:
    explicit LinearSvr(const BaselineSpec& spec) : spec_(spec) {}

    void fit(const Matrix& x, std::span<const double> y) override {
        check_training_data(x, y);
        const std::size_t n = x.rows();
        const std::size_t d = x.cols();
        w_.assign(d, 0.0);
        b_ = 0.0;
        const double eta = spec_.svr_step;
        const double reg = 1.0 / static_cast<double>(n);
        for (std::size_t pass = 0; pass < spec_.svr_passes; ++pass) {
            for (std::size_t i = 0; i < n; ++i) {
                double f = b_;
                for (std::size_t c = 0; c < d; ++c) {
                    f += w_[c] * x(i, c);
                }
                const double r = y[i] - f;
                const double s = std::abs(r) > spec_.svr_epsilon ? (r > 0.0 ? 1.0 : -1.0) : 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    w_[c] -= eta * (reg * w_[c] - spec_.svr_c * s * x(i, c));
                }
                b_ += eta * spec_.svr_c * s;
            }
        }
        fitted_ = true;
    }

    std::vector<double> predict(const Matrix& x) const override {
        check_predict_input(fitted_, "LinearSvr", w_.size(), x);
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double f = b_;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                f += w_[c] * x(i, c);
            }
            out[i] = f;
        }
        return out;
    }

    BaselineKind kind() const noexcept override { return BaselineKind::SvrLinear; }

private:
    BaselineSpec spec_;
    std::vector<double> w_;
    double b_ = 0.0;
    bool fitted_ = false;
};

}  // namespace

// --- linear regression -----------------------------------------------------------------

void LinearRegression::fit(const Matrix& x, std::span<const double> y) {
    check_training_data(x, y);
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();

    // Centering folds the intercept out of the system.
    std::vector<double> mean_x(d, 0.0);
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            mean_x[c] += x(i, c);
        }
        mean_y += y[i];
    }
    for (double& m : mean_x) {
        m /= static_cast<double>(n);
    }
    mean_y /= static_cast<double>(n);

    std::vector<double> gram(d * d, 0.0);
    std::vector<double> rhs(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = x(i, a) - mean_x[a];
            rhs[a] += xa * (y[i] - mean_y);
            for (std::size_t b = 0; b < d; ++b) {
                gram[a * d + b] += xa * (x(i, b) - mean_x[b]);
            }
        }
    }

    auto coef = solve(gram, rhs, d);
    if (!coef) {
        for (std::size_t a = 0; a < d; ++a) {
            gram[a * d + a] += ridge_;
        }
        coef = solve(gram, rhs, d);
    }
    if (!coef) {
        // Zero-variance features: the ridge-regularized optimum is w = 0.
        coef = std::vector<double>(d, 0.0);
    }
    coef_ = std::move(*coef);
    intercept_ = mean_y;
    for (std::size_t c = 0; c < d; ++c) {
        intercept_ -= coef_[c] * mean_x[c];
    }
    fitted_ = true;
}

std::vector<double> LinearRegression::predict(const Matrix& x) const {
    check_predict_input(fitted_, "LinearRegression", coef_.size(), x);
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double f = intercept_;
        for (std::size_t c = 0; c < x.cols(); ++c) {
            f += coef_[c] * x(i, c);
        }
        out[i] = f;
    }
    return out;
}

// --- factory ---------------------------------------------------------------------------

std::string_view display_name(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::Linear: return "Linear Regression";
        case BaselineKind::Knn: return "K-Nearest Neighbors";
        case BaselineKind::DecisionTree: return "Decision Tree";
        case BaselineKind::RandomForest: return "Random Forest";
        case BaselineKind::GradientBoosting: return "Gradient Boosting";
        case BaselineKind::SvrLinear: return "SVR";
    }
    return "?";
}

std::string_view kind_id(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::Linear: return "linear";
        case BaselineKind::Knn: return "knn";
        case BaselineKind::DecisionTree: return "decision_tree";
        case BaselineKind::RandomForest: return "random_forest";
        case BaselineKind::GradientBoosting: return "gradient_boosting";
        case BaselineKind::SvrLinear: return "svr_linear";
    }
    return "?";
}

void BaselineSpec::validate() const {
    if (knn_k < 1) {
        throw ConfigError("knn k must be >= 1");
    }
    if (min_samples_leaf < 1) {
        throw ConfigError("min_samples_leaf must be >= 1");
    }
    if (forest_trees < 1) {
        throw ConfigError("random forest needs at least one tree");
    }
    if (forest_max_features < 1) {
        throw ConfigError("forest max features must be >= 1");
    }
    if (!(boosting_learning_rate > 0.0) || boosting_depth < 1) {
        throw ConfigError("boosting needs learning rate > 0 and depth >= 1");
    }
    if (!(svr_epsilon >= 0.0) || !(svr_c > 0.0) || !(svr_step > 0.0)) {
        throw ConfigError("svr needs epsilon >= 0, C > 0, step > 0");
    }
    if (!(ridge_fallback > 0.0)) {
        throw ConfigError("ridge fallback must be > 0");
    }
}

std::unique_ptr<Regressor> make_baseline(const BaselineSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case BaselineKind::Linear: return std::make_unique<LinearRegression>(spec.ridge_fallback);
        case BaselineKind::Knn: return std::make_unique<KnnRegressor>(spec.knn_k);
        case BaselineKind::DecisionTree:
            return std::make_unique<DecisionTreeRegressor>(
                RegressionTree::Options{spec.tree_max_depth, spec.min_samples_leaf, 0}, spec.seed);
        case BaselineKind::RandomForest: return std::make_unique<RandomForestRegressor>(spec);
        case BaselineKind::GradientBoosting: return std::make_unique<GradientBoostingRegressor>(spec);
        case BaselineKind::SvrLinear: return std::make_unique<LinearSvr>(spec);
    }
    throw ConfigError("unknown baseline kind");
}

}  // namespace pavetwin
