#pragma once

#include "pavetwin/baselines.hpp"
#include "pavetwin/graph.hpp"
#include "pavetwin/metrics.hpp"
#include "pavetwin/pipeline.hpp"
#include "pavetwin/sage.hpp"

#include <span>
#include <string>
#include <vector>

namespace pavetwin {

/// Rows of `x` in the given order.
Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows);
std::vector<double> select(std::span<const double> v, std::span<const std::size_t> idx);

struct ModelOutputs {
    std::string model;
    std::vector<double> train_prediction;  // split.train order
    std::vector<double> test_prediction;   // split.test order
};

struct ModelComparison {
    NodeSplit split;
    std::vector<EvalReport> test;   // GNN first, then baselines in table order
    std::vector<EvalReport> train;
    std::vector<ModelOutputs> outputs;
};

/// Fits every baseline on the standardized train-node features of `graph`
/// and scores them with the GNN on the same split. The graph features must
/// have been produced with the model's scaler and encoder.
ModelComparison compare_models(const PavementGraph& graph, const SageModel& gnn, const NodeSplit& split,
                               const BaselineSpec& defaults);

/// Test-set predicted-vs-actual rows: model,segment_id,actual,predicted.
std::string scatter_csv(const ModelComparison& cmp, const PavementGraph& graph);

}  // namespace pavetwin
