#include "pavetwin/baselines.hpp"
#include "pavetwin/errors.hpp"
#include "pavetwin/rng.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace pavetwin {

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;
    double score = 0.0;
};

}  // namespace

void RegressionTree::fit(const Matrix& x, std::span<const double> y) {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    fit_rows(x, y, rows);
}

void RegressionTree::fit_rows(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows) {
    if (x.rows() != y.size()) {
        throw DimensionError("tree: " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) +
                             " targets");
    }
    if (rows.empty()) {
        throw EmptyInput();
    }
    n_features_ = x.cols();
    nodes_.clear();
    Rng rng(seed_);
    const std::size_t min_leaf = std::max<std::size_t>(1, options_.min_samples_leaf);
    const std::size_t max_features =
        options_.max_features == 0 ? n_features_ : std::min(options_.max_features, n_features_);

    std::vector<std::size_t> features(n_features_);
    std::vector<std::size_t> sorted;

    // Best split of `idx` on feature f; updates `best` when strictly better.
    auto scan_feature = [&](const std::vector<std::size_t>& idx, std::size_t f, SplitChoice& best) {
        sorted = idx;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        double total = 0.0;
        for (auto r : sorted) {
            total += y[r];
        }
        const std::size_t n = sorted.size();
        double left_sum = 0.0;
        for (std::size_t p = 1; p < n; ++p) {
            left_sum += y[sorted[p - 1]];
            const double lo = x(sorted[p - 1], f);
            const double hi = x(sorted[p], f);
            if (!(lo < hi) || p < min_leaf || n - p < min_leaf) {
                continue;
            }
            const double right_sum = total - left_sum;
            const double score = left_sum * left_sum / static_cast<double>(p) +
                                 right_sum * right_sum / static_cast<double>(n - p);
            if (best.feature < 0 || score > best.score) {
                double threshold = 0.5 * (lo + hi);
                if (!(threshold < hi)) {
                    threshold = lo;
                }
                best = {static_cast<int>(f), threshold, p, score};
            }
        }
    };

    std::function<std::int32_t(std::vector<std::size_t>, std::size_t)> build =
        [&](std::vector<std::size_t> idx, std::size_t depth) -> std::int32_t {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        double sum = 0.0;
        for (auto r : idx) {
            sum += y[r];
        }
        nodes_[id].value = sum / static_cast<double>(idx.size());

        const bool pure = std::all_of(idx.begin(), idx.end(), [&](std::size_t r) { return y[r] == y[idx[0]]; });
        const bool depth_cap = options_.max_depth != 0 && depth >= options_.max_depth;
        if (pure || depth_cap || idx.size() < 2 * min_leaf) {
            return id;
        }

        std::iota(features.begin(), features.end(), std::size_t{0});
        if (max_features < n_features_) {
            for (std::size_t k = 0; k + 1 < n_features_; ++k) {
                const auto j = k + static_cast<std::size_t>(rng.below(n_features_ - k));
                std::swap(features[k], features[j]);
            }
        }
        SplitChoice best;
        for (std::size_t k = 0; k < max_features; ++k) {
            scan_feature(idx, features[k], best);
        }
        // No valid split among the sampled features: keep looking at the rest.
        for (std::size_t k = max_features; k < n_features_ && best.feature < 0; ++k) {
            scan_feature(idx, features[k], best);
        }
        if (best.feature < 0) {
            return id;
        }

        const auto f = static_cast<std::size_t>(best.feature);
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : idx) {
            (x(r, f) <= best.threshold ? left : right).push_back(r);
        }
        idx.clear();
        idx.shrink_to_fit();
        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        const auto l = build(std::move(left), depth + 1);
        const auto r = build(std::move(right), depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    };

    build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
}

double RegressionTree::predict_row(std::span<const double> row) const {
    std::int32_t id = 0;
    while (nodes_[id].feature >= 0) {
        const auto& node = nodes_[id];
        id = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[id].value;
}

std::vector<double> RegressionTree::predict(const Matrix& x) const {
    if (nodes_.empty()) {
        throw NotFitted("RegressionTree");
    }
    if (x.cols() != n_features_) {
        throw DimensionError("tree fitted on " + std::to_string(n_features_) + " features, got " +
                             std::to_string(x.cols()));
    }
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = predict_row(x.row(i));
    }
    return out;
}

std::size_t RegressionTree::depth() const noexcept {
    if (nodes_.empty()) {
        return 0;
    }
    std::size_t deepest = 0;
    std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (nodes_[id].feature >= 0) {
            stack.emplace_back(nodes_[id].left, d + 1);
            stack.emplace_back(nodes_[id].right, d + 1);
        }
    }
    return deepest;
}

}  // namespace pavetwin
