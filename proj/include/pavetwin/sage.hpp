#pragma once

#include "pavetwin/graph.hpp"
#include "pavetwin/matrix.hpp"
#include "pavetwin/nn.hpp"
#include "pavetwin/pipeline.hpp"
#include "pavetwin/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace pavetwin {

/// Mean of incoming-neighbor rows of H; isolated nodes get zeros. With
/// `weighted`, neighbors are averaged with their edge weights instead.
Matrix aggregate_mean(const Matrix& h, const Adjacency& adjacency, bool weighted = false);

/// Transpose of aggregate_mean applied to a gradient: scatters each node's
/// row back to its neighbors with the same coefficients.
Matrix aggregate_mean_backward(const Matrix& grad, const Adjacency& adjacency, bool weighted = false);

/// One neighborhood-aggregation layer: H' = H W_self^T + mean_N(H) W_neighbor^T + b.
struct SageLayer {
    Matrix self_weight;      // d_out x d_in
    Matrix neighbor_weight;  // d_out x d_in
    Matrix bias;             // 1 x d_out

    static SageLayer zeros(std::size_t d_in, std::size_t d_out);
    std::size_t input_dim() const noexcept { return self_weight.cols(); }
    std::size_t output_dim() const noexcept { return self_weight.rows(); }
};

/// Pre-activation output of `layer`. Throws ShapeError.
Matrix layer_forward(const SageLayer& layer, const Matrix& h, const Adjacency& adjacency, bool weighted = false);

struct TrainConfig {
    double lr = 0.001;
    double weight_decay = 1e-5;
    double dropout = 0.2;
    std::size_t epochs = 2000;
    std::size_t hidden_dim = 64;
    std::uint64_t seed = 42;
    bool weighted_aggregation = false;

    /// Throws ConfigError.
    void validate() const;
};

/// Two aggregation layers (4 -> h -> h) with ReLU, dropout after the first,
/// and an affine scalar head.
struct SageModel {
    SageLayer layer1;
    SageLayer layer2;
    Matrix head_weight;  // 1 x h
    Matrix head_bias;    // 1 x 1
    FeatureScaler scaler;
    LabelEncoder encoder;
    TrainConfig config;

    static SageModel zeros(std::size_t input_dim, std::size_t hidden_dim);
    /// Glorot-uniform weights, zero biases.
    static SageModel initialize(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

    std::size_t input_dim() const noexcept { return layer1.input_dim(); }
    std::size_t hidden_dim() const noexcept { return layer1.output_dim(); }

    std::size_t parameter_count() const noexcept;
    /// Flat copy in the order layer1 (self, neighbor, bias), layer2, head weight, head bias.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
};

/// Intermediate values kept for the backward pass.
struct ForwardCache {
    Matrix aggregated_input;   // mean_N(X)
    Matrix pre1;               // layer1 pre-activation
    std::vector<std::uint8_t> dropout_mask;
    Matrix hidden1;            // post ReLU + dropout
    Matrix aggregated_hidden1; // mean_N(hidden1)
    Matrix pre2;
    Matrix hidden2;            // post ReLU
    std::vector<double> prediction;
};

/// y_hat = head(ReLU(layer2(dropout(ReLU(layer1(X)))))); dropout only when training.
std::vector<double> model_forward(const SageModel& model, const PavementGraph& graph, bool training, Rng& rng,
                                  ForwardCache* cache = nullptr);

/// Gradient of `loss` w.r.t. every parameter, in `SageModel::flatten` layout.
/// `dloss_dpred` is dL/dy_hat per node.
std::vector<double> model_backward(const SageModel& model, const PavementGraph& graph, const ForwardCache& cache,
                                   std::span<const double> dloss_dpred);

/// Masked MSE over `nodes` and its gradient w.r.t. all parameters (flat layout).
/// Deterministic when `training` is false.
double masked_loss(const SageModel& model, const PavementGraph& graph, std::span<const std::size_t> nodes,
                   bool training, Rng& rng, std::vector<double>* grad);

struct TrainReport {
    std::vector<double> train_loss;  // per epoch, dropout active, PCI^2
    double final_train_mse = 0.0;    // dropout off
    double final_test_mse = 0.0;     // dropout off
    double wall_seconds = 0.0;
};

/// Called after each epoch with (epoch index, train loss).
using EpochCallback = std::function<void(std::size_t, double)>;

struct TrainResult {
    SageModel model;
    TrainReport report;
};

/// Full-graph training with loss masked to `split.train`; one Adam step per
/// parameter per epoch. Throws ConfigError, NonFinite.
TrainResult train(const PavementGraph& graph, const NodeSplit& split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Inference-mode forward. Throws DimensionError on a feature-width mismatch.
std::vector<double> predict(const SageModel& model, const PavementGraph& graph);

// --- checkpoints ----------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_json(const SageModel& model);
SageModel model_from_checkpoint_json(const std::string& text);
/// Throws DataError if the file cannot be written.
void save_checkpoint(const SageModel& model, const std::filesystem::path& path);
/// Throws MissingFile, CorruptCheckpoint, SchemaVersionError.
SageModel load_checkpoint(const std::filesystem::path& path);

}  // namespace pavetwin
