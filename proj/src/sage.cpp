#include "pavetwin/sage.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/simd.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <string>

namespace pavetwin {

namespace {

constexpr std::size_t kParamCount = 8;

std::array<Matrix*, kParamCount> parameters(SageModel& m) {
    return {&m.layer1.self_weight, &m.layer1.neighbor_weight, &m.layer1.bias,
            &m.layer2.self_weight, &m.layer2.neighbor_weight, &m.layer2.bias,
            &m.head_weight,        &m.head_bias};
}

std::array<const Matrix*, kParamCount> parameters(const SageModel& m) {
    return {&m.layer1.self_weight, &m.layer1.neighbor_weight, &m.layer1.bias,
            &m.layer2.self_weight, &m.layer2.neighbor_weight, &m.layer2.bias,
            &m.head_weight,        &m.head_bias};
}

using Gradients = std::array<Matrix, kParamCount>;

void glorot_fill(Matrix& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (double& x : w.values()) {
        x = rng.uniform(-limit, limit);
    }
}

void check_layer_input(const SageLayer& layer, const Matrix& h) {
    if (h.cols() != layer.input_dim()) {
        throw ShapeError("layer expects " + std::to_string(layer.input_dim()) + " input columns, got " +
                         std::to_string(h.cols()));
    }
}

// Pre-activation given an already aggregated input.
Matrix layer_forward_aggregated(const SageLayer& layer, const Matrix& h, const Matrix& aggregated) {
    check_layer_input(layer, h);
    Matrix out = matmul_transpose_b(h, layer.self_weight);
    add_in_place(out, matmul_transpose_b(aggregated, layer.neighbor_weight));
    add_row_broadcast(out, layer.bias);
    return out;
}

Gradients backward_impl(const SageModel& model, const PavementGraph& graph, const ForwardCache& cache,
                        std::span<const double> dloss_dpred) {
    const std::size_t n = graph.node_count();
    if (dloss_dpred.size() != n) {
        throw ShapeError("prediction gradient length does not match node count");
    }
    const bool weighted = model.config.weighted_aggregation;
    const auto& k = simd::active();
    const std::size_t h = model.hidden_dim();

    Gradients g;
    // Head.
    Matrix d_hidden2(n, h);
    g[6] = Matrix(1, h);
    double head_bias_grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dy = dloss_dpred[i];
        if (dy == 0.0) {
            continue;
        }
        k.axpy(dy, cache.hidden2.row(i).data(), g[6].values().data(), h);
        k.axpy(dy, model.head_weight.values().data(), d_hidden2.row(i).data(), h);
        head_bias_grad += dy;
    }
    g[7] = Matrix(1, 1, head_bias_grad);

    // Layer 2.
    const Matrix d_pre2 = relu_backward(d_hidden2, cache.pre2);
    g[3] = matmul_transpose_a(d_pre2, cache.hidden1);
    g[4] = matmul_transpose_a(d_pre2, cache.aggregated_hidden1);
    g[5] = column_sums(d_pre2);

    Matrix d_hidden1 = matmul(d_pre2, model.layer2.self_weight);
    add_in_place(d_hidden1, aggregate_mean_backward(matmul(d_pre2, model.layer2.neighbor_weight), graph.adjacency,
                                                    weighted));

    // Dropout then layer 1.
    const double rate = cache.dropout_mask.empty() ? 0.0 : model.config.dropout;
    const Matrix d_relu1 =
        cache.dropout_mask.empty() ? d_hidden1 : dropout_backward(d_hidden1, cache.dropout_mask, rate);
    const Matrix d_pre1 = relu_backward(d_relu1, cache.pre1);
    g[0] = matmul_transpose_a(d_pre1, graph.features);
    g[1] = matmul_transpose_a(d_pre1, cache.aggregated_input);
    g[2] = column_sums(d_pre1);
    return g;
}

std::vector<double> flatten_gradients(const Gradients& g) {
    std::vector<double> flat;
    for (const auto& m : g) {
        flat.insert(flat.end(), m.data().begin(), m.data().end());
    }
    return flat;
}

double masked_mse_and_grad(std::span<const double> prediction, std::span<const double> target,
                           std::span<const std::size_t> nodes, std::vector<double>* dpred) {
    if (nodes.empty()) {
        throw EmptyInput();
    }
    const double inv_n = 1.0 / static_cast<double>(nodes.size());
    double loss = 0.0;
    if (dpred != nullptr) {
        dpred->assign(prediction.size(), 0.0);
    }
    for (auto i : nodes) {
        const double d = prediction[i] - target[i];
        loss += d * d;
        if (dpred != nullptr) {
            (*dpred)[i] += 2.0 * inv_n * d;
        }
    }
    return loss * inv_n;
}

}  // namespace

// --- aggregation ---------------------------------------------------------------

Matrix aggregate_mean(const Matrix& h, const Adjacency& adjacency, bool weighted) {
    if (h.rows() != adjacency.node_count()) {
        throw ShapeError("aggregate_mean: " + std::to_string(h.rows()) + " rows for " +
                         std::to_string(adjacency.node_count()) + " nodes");
    }
    const auto& k = simd::active();
    const std::size_t d = h.cols();
    Matrix out(h.rows(), d);
    for (std::size_t i = 0; i < h.rows(); ++i) {
        const auto nb = adjacency.neighbors(i);
        if (nb.empty()) {
            continue;
        }
        double* dst = out.row(i).data();
        if (weighted) {
            const auto w = adjacency.weights(i);
            double total = 0.0;
            for (double x : w) {
                total += x;
            }
            for (std::size_t e = 0; e < nb.size(); ++e) {
                k.axpy(w[e] / total, h.row(static_cast<std::size_t>(nb[e])).data(), dst, d);
            }
        } else {
            for (auto j : nb) {
                k.axpy(1.0, h.row(static_cast<std::size_t>(j)).data(), dst, d);
            }
            const double inv = 1.0 / static_cast<double>(nb.size());
            for (std::size_t c = 0; c < d; ++c) {
                dst[c] *= inv;
            }
        }
    }
    return out;
}

Matrix aggregate_mean_backward(const Matrix& grad, const Adjacency& adjacency, bool weighted) {
    if (grad.rows() != adjacency.node_count()) {
        throw ShapeError("aggregate_mean_backward: row count mismatch");
    }
    const auto& k = simd::active();
    const std::size_t d = grad.cols();
    Matrix out(grad.rows(), d);
    for (std::size_t i = 0; i < grad.rows(); ++i) {
        const auto nb = adjacency.neighbors(i);
        if (nb.empty()) {
            continue;
        }
        const double* src = grad.row(i).data();
        if (weighted) {
            const auto w = adjacency.weights(i);
            double total = 0.0;
            for (double x : w) {
                total += x;
            }
            for (std::size_t e = 0; e < nb.size(); ++e) {
                k.axpy(w[e] / total, src, out.row(static_cast<std::size_t>(nb[e])).data(), d);
            }
        } else {
            const double inv = 1.0 / static_cast<double>(nb.size());
            for (auto j : nb) {
                k.axpy(inv, src, out.row(static_cast<std::size_t>(j)).data(), d);
            }
        }
    }
    return out;
}

// --- layers and model ----------------------------------------------------------

SageLayer SageLayer::zeros(std::size_t d_in, std::size_t d_out) {
    return {Matrix(d_out, d_in), Matrix(d_out, d_in), Matrix(1, d_out)};
}

Matrix layer_forward(const SageLayer& layer, const Matrix& h, const Adjacency& adjacency, bool weighted) {
    check_layer_input(layer, h);
    return layer_forward_aggregated(layer, h, aggregate_mean(h, adjacency, weighted));
}

void TrainConfig::validate() const {
    if (epochs < 1) {
        throw ConfigError("epochs must be >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ConfigError("dropout must be in [0, 1)");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw ConfigError("learning rate must be > 0");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("weight decay must be >= 0");
    }
    if (hidden_dim < 1) {
        throw ConfigError("hidden_dim must be >= 1");
    }
}

SageModel SageModel::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    SageModel m;
    m.layer1 = SageLayer::zeros(input_dim, hidden_dim);
    m.layer2 = SageLayer::zeros(hidden_dim, hidden_dim);
    m.head_weight = Matrix(1, hidden_dim);
    m.head_bias = Matrix(1, 1);
    m.config.hidden_dim = hidden_dim;
    return m;
}

SageModel SageModel::initialize(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    SageModel m = zeros(input_dim, hidden_dim);
    glorot_fill(m.layer1.self_weight, rng);
    glorot_fill(m.layer1.neighbor_weight, rng);
    glorot_fill(m.layer2.self_weight, rng);
    glorot_fill(m.layer2.neighbor_weight, rng);
    glorot_fill(m.head_weight, rng);
    return m;
}

std::size_t SageModel::parameter_count() const noexcept {
    std::size_t total = 0;
    for (const Matrix* p : parameters(*this)) {
        total += p->size();
    }
    return total;
}

std::vector<double> SageModel::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const Matrix* p : parameters(*this)) {
        flat.insert(flat.end(), p->data().begin(), p->data().end());
    }
    return flat;
}

void SageModel::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
        throw ShapeError("parameter vector has " + std::to_string(flat.size()) + " entries, model has " +
                         std::to_string(parameter_count()));
    }
    std::size_t offset = 0;
    for (Matrix* p : parameters(*this)) {
        auto dst = p->values();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                  flat.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
        offset += dst.size();
    }
}

std::vector<double> model_forward(const SageModel& model, const PavementGraph& graph, bool training, Rng& rng,
                                  ForwardCache* cache) {
    if (graph.features.cols() != model.input_dim()) {
        throw ShapeError("graph has " + std::to_string(graph.features.cols()) + " feature columns, model expects " +
                         std::to_string(model.input_dim()));
    }
    const bool weighted = model.config.weighted_aggregation;
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;

    c.aggregated_input = aggregate_mean(graph.features, graph.adjacency, weighted);
    c.pre1 = layer_forward_aggregated(model.layer1, graph.features, c.aggregated_input);
    Matrix act1 = relu(c.pre1);
    if (training && model.config.dropout > 0.0) {
        auto dropped = dropout(act1, model.config.dropout, true, rng);
        c.hidden1 = std::move(dropped.output);
        c.dropout_mask = std::move(dropped.mask);
    } else {
        c.hidden1 = std::move(act1);
        c.dropout_mask.clear();
    }
    c.aggregated_hidden1 = aggregate_mean(c.hidden1, graph.adjacency, weighted);
    c.pre2 = layer_forward_aggregated(model.layer2, c.hidden1, c.aggregated_hidden1);
    c.hidden2 = relu(c.pre2);

    const auto& k = simd::active();
    const double bias = model.head_bias(0, 0);
    c.prediction.resize(graph.node_count());
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        c.prediction[i] = k.dot(c.hidden2.row(i).data(), model.head_weight.values().data(), model.hidden_dim()) + bias;
    }
    return c.prediction;
}

std::vector<double> model_backward(const SageModel& model, const PavementGraph& graph, const ForwardCache& cache,
                                   std::span<const double> dloss_dpred) {
    return flatten_gradients(backward_impl(model, graph, cache, dloss_dpred));
}

double masked_loss(const SageModel& model, const PavementGraph& graph, std::span<const std::size_t> nodes,
                   bool training, Rng& rng, std::vector<double>* grad) {
    ForwardCache cache;
    const auto pred = model_forward(model, graph, training, rng, &cache);
    std::vector<double> dpred;
    const double loss = masked_mse_and_grad(pred, graph.target, nodes, grad != nullptr ? &dpred : nullptr);
    if (grad != nullptr) {
        *grad = model_backward(model, graph, cache, dpred);
    }
    return loss;
}

TrainResult train(const PavementGraph& graph, const NodeSplit& split, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (split.train.empty()) {
        throw ConfigError("training split is empty");
    }
    for (auto idx : split.train) {
        if (idx >= graph.node_count()) {
            throw ConfigError("split index out of range");
        }
    }
    for (auto idx : split.test) {
        if (idx >= graph.node_count()) {
            throw ConfigError("split index out of range");
        }
    }
    const auto start = std::chrono::steady_clock::now();

    Rng init_rng = Rng::stream(cfg.seed, 0);
    Rng dropout_rng = Rng::stream(cfg.seed, 1);

    TrainResult result;
    SageModel& model = result.model;
    model = SageModel::initialize(graph.features.cols(), cfg.hidden_dim, init_rng);
    model.config = cfg;

    const AdamConfig adam{cfg.lr, cfg.weight_decay};
    auto params = parameters(model);
    std::array<AdamState, kParamCount> states;
    for (std::size_t p = 0; p < kParamCount; ++p) {
        states[p] = AdamState::for_param(*params[p]);
    }

    ForwardCache cache;
    std::vector<double> dpred;
    result.report.train_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto pred = model_forward(model, graph, true, dropout_rng, &cache);
        const double loss = masked_mse_and_grad(pred, graph.target, split.train, &dpred);
        if (!std::isfinite(loss)) {
            throw NonFinite("training loss became non-finite at epoch " + std::to_string(epoch));
        }
        const Gradients grads = backward_impl(model, graph, cache, dpred);
        for (std::size_t p = 0; p < kParamCount; ++p) {
            adam_step(*params[p], grads[p], states[p], adam);
        }
        result.report.train_loss.push_back(loss);
        if (on_epoch) {
            on_epoch(epoch, loss);
        }
    }

    const auto final_pred = predict(model, graph);
    result.report.final_train_mse = masked_mse_and_grad(final_pred, graph.target, split.train, nullptr);
    result.report.final_test_mse =
        split.test.empty() ? 0.0 : masked_mse_and_grad(final_pred, graph.target, split.test, nullptr);
    if (!std::isfinite(result.report.final_train_mse) || !std::isfinite(result.report.final_test_mse)) {
        throw NonFinite("final evaluation produced a non-finite loss");
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<double> predict(const SageModel& model, const PavementGraph& graph) {
    if (graph.features.cols() != model.input_dim()) {
        throw DimensionError("graph has " + std::to_string(graph.features.cols()) +
                             " feature columns, model expects " + std::to_string(model.input_dim()));
    }
    Rng unused(0);
    return model_forward(model, graph, false, unused);
}

}  // namespace pavetwin
