#include "pavetwin/errors.hpp"
#include "pavetwin/sage.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <numeric>

namespace pavetwin {
namespace {

EdgeIndex edges_of(std::vector<std::pair<int, int>> directed) {
    EdgeIndex e;
    for (auto [s, t] : directed) {
        e.source.push_back(s);
        e.target.push_back(t);
        e.weight.push_back(1.0);
    }
    return e;
}

TEST(Aggregate, TwoPointMeanAndIsolated) {
    Matrix h(7, 2);
    h(2, 0) = 1.0;
    h(4, 0) = 3.0;
    h(6, 1) = 9.0;
    const auto adj = Adjacency::from_edges(7, edges_of({{2, 5}, {4, 5}}));
    const auto m = aggregate_mean(h, adj);
    EXPECT_EQ(m(5, 0), 2.0);
    EXPECT_EQ(m(5, 1), 0.0);
    EXPECT_EQ(m(6, 0), 0.0);
    EXPECT_EQ(m(6, 1), 0.0);
}

TEST(Aggregate, MatchesLoopOracle) {
    const auto g = testing::random_graph(30, 5, 0.15, 8);
    for (bool weighted : {false, true}) {
        const auto m = aggregate_mean(g.features, g.adjacency, weighted);
        for (std::size_t i = 0; i < 30; ++i) {
            for (std::size_t c = 0; c < 5; ++c) {
                long double num = 0, den = 0;
                for (std::size_t k = 0; k < g.edges.size(); ++k) {
                    if (static_cast<std::size_t>(g.edges.target[k]) == i) {
                        const double w = weighted ? g.edges.weight[k] : 1.0;
                        num += w * g.features(static_cast<std::size_t>(g.edges.source[k]), c);
                        den += w;
                    }
                }
                const double expected = den == 0 ? 0.0 : static_cast<double>(num / den);
                EXPECT_NEAR(m(i, c), expected, 1e-12);
            }
        }
    }
}

TEST(Aggregate, BackwardIsTranspose) {
    // <agg(H), G> == <H, agg_backward(G)> for random H, G.
    const auto g = testing::random_graph(25, 3, 0.2, 2);
    Rng rng(1);
    Matrix grad(25, 3);
    for (auto& v : grad.values()) {
        v = rng.normal();
    }
    for (bool weighted : {false, true}) {
        const auto fwd = aggregate_mean(g.features, g.adjacency, weighted);
        const auto bwd = aggregate_mean_backward(grad, g.adjacency, weighted);
        double lhs = 0, rhs = 0;
        for (std::size_t k = 0; k < fwd.size(); ++k) {
            lhs += fwd.values()[k] * grad.values()[k];
            rhs += g.features.values()[k] * bwd.values()[k];
        }
        EXPECT_NEAR(lhs, rhs, 1e-10);
    }
}

TEST(Layer, SelfTermOnly) {
    const auto g = testing::random_graph(10, 3, 0.3, 5);
    auto layer = SageLayer::zeros(3, 2);
    layer.self_weight = Matrix{{1, 2, 3}, {-1, 0, 0.5}};
    const auto out = layer_forward(layer, g.features, g.adjacency);
    const auto no_edges = Adjacency::from_edges(10, EdgeIndex{});
    EXPECT_EQ(out, layer_forward(layer, g.features, no_edges));
    for (std::size_t i = 0; i < 10; ++i) {
        const auto x = g.features.row(i);
        EXPECT_NEAR(out(i, 0), x[0] + 2 * x[1] + 3 * x[2], 1e-12);
        EXPECT_NEAR(out(i, 1), -x[0] + 0.5 * x[2], 1e-12);
    }
}

TEST(Layer, NeighborTermAndIsolatedNode) {
    Matrix h{{1, 2}, {10, 20}, {5, 5}};
    const auto adj = Adjacency::from_edges(3, edges_of({{1, 0}, {0, 1}}));
    auto only_neigh = SageLayer::zeros(2, 2);
    only_neigh.neighbor_weight = Matrix::identity(2);
    const auto a = layer_forward(only_neigh, h, adj);
    EXPECT_EQ(a(2, 0), 0.0);
    EXPECT_EQ(a(2, 1), 0.0);

    auto both = SageLayer::zeros(2, 2);
    both.self_weight = Matrix::identity(2);
    both.neighbor_weight = Matrix::identity(2);
    const auto b = layer_forward(both, h, adj);
    EXPECT_EQ(b(0, 0), 11.0);
    EXPECT_EQ(b(0, 1), 22.0);
    EXPECT_EQ(b(2, 0), 5.0);
    EXPECT_THROW(layer_forward(both, Matrix(3, 3), adj), ShapeError);
}

TEST(Model, ZeroWeightsPredictZero) {
    const auto g = testing::random_graph(20, 4, 0.2, 3);
    const auto model = SageModel::zeros(4, 8);
    for (double y : predict(model, g)) {
        EXPECT_EQ(y, 0.0);
    }
}

TEST(Model, InferenceDeterministicAndTrainingStochastic) {
    const auto g = testing::random_graph(40, 4, 0.2, 3);
    Rng init(1);
    const auto model = SageModel::initialize(4, 16, init);
    EXPECT_EQ(predict(model, g), predict(model, g));
    Rng r1(5), r2(6);
    EXPECT_NE(model_forward(model, g, true, r1), model_forward(model, g, true, r2));
    Matrix wide(40, 5);
    auto bad = PavementGraph::from_parts(wide, g.edges, g.target);
    EXPECT_THROW(predict(model, bad), DimensionError);
}

TEST(Model, FlattenAssignRoundTrip) {
    Rng init(2);
    const auto model = SageModel::initialize(4, 6, init);
    const auto flat = model.flatten();
    EXPECT_EQ(flat.size(), model.parameter_count());
    EXPECT_EQ(model.parameter_count(), 2 * 6 * 4 + 6 + 2 * 6 * 6 + 6 + 6 + 1);
    auto copy = SageModel::zeros(4, 6);
    copy.assign(flat);
    EXPECT_EQ(copy.flatten(), flat);
}

TEST(Model, GlorotRangeAndZeroBiases) {
    Rng init(9);
    const auto m = SageModel::initialize(4, 64, init);
    const double limit1 = std::sqrt(6.0 / (4 + 64));
    for (double w : m.layer1.self_weight.values()) {
        EXPECT_LE(std::abs(w), limit1);
    }
    for (double b : m.layer1.bias.values()) {
        EXPECT_EQ(b, 0.0);
    }
    EXPECT_EQ(m.head_bias(0, 0), 0.0);
}

double masked_loss_at(const SageModel& base, const PavementGraph& g, std::span<const std::size_t> nodes,
                      std::span<const double> p, std::vector<double>* grad) {
    auto m = base;
    m.assign(p);
    Rng unused(0);
    return masked_loss(m, g, nodes, false, unused, grad);
}

TEST(Model, GradientCheck) {
    for (bool weighted : {false, true}) {
        auto g = testing::random_graph(30, 4, 0.2, 12);
        Rng init(3);
        auto model = SageModel::initialize(4, 8, init);
        model.config.weighted_aggregation = weighted;
        std::vector<std::size_t> nodes(20);
        std::iota(nodes.begin(), nodes.end(), std::size_t{0});
        const LossWithGradient f = [&](std::span<const double> p, std::vector<double>* grad) {
            return masked_loss_at(model, g, nodes, p, grad);
        };
        Rng probe(4);
        const auto flat = model.flatten();
        const auto result = grad_check(f, flat, 100, probe);
        EXPECT_LT(result.max_relative_error, 1e-4) << "weighted=" << weighted;
    }
}

TEST(Model, LinearPathGradientExact) {
    // With zero hidden weights only the head bias moves the loss, which is quadratic in it.
    auto g = testing::random_graph(15, 4, 0.3, 1);
    auto model = SageModel::zeros(4, 5);
    std::vector<std::size_t> nodes{0, 1, 2, 3, 4};
    const LossWithGradient f = [&](std::span<const double> p, std::vector<double>* grad) {
        return masked_loss_at(model, g, nodes, p, grad);
    };
    const auto flat = model.flatten();
    std::vector<double> grad;
    f(flat, &grad);
    double mean = 0;
    for (auto i : nodes) {
        mean += g.target[i];
    }
    mean /= 5.0;
    EXPECT_NEAR(grad.back(), -2.0 * mean, 1e-10);
}

TEST(Train, OneEpochIsOneAdamStep) {
    auto g = testing::random_graph(30, 4, 0.2, 6);
    const auto split = split_nodes(30, 1);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.hidden_dim = 8;
    cfg.seed = 17;
    const auto result = train(g, split, cfg);

    Rng init = Rng::stream(17, 0);
    const auto start = SageModel::initialize(4, 8, init);
    Rng drop = Rng::stream(17, 1);
    auto probe = start;
    probe.config = cfg;
    std::vector<double> grad;
    const double loss = masked_loss(probe, g, split.train, true, drop, &grad);
    EXPECT_DOUBLE_EQ(result.report.train_loss.at(0), loss);

    // First Adam step: m_hat = g, v_hat = g^2 with g including the L2 term.
    const auto p0 = start.flatten();
    const auto p1 = result.model.flatten();
    ASSERT_EQ(p0.size(), p1.size());
    for (std::size_t k = 0; k < p0.size(); ++k) {
        const double gk = grad[k] + cfg.weight_decay * p0[k];
        const double expected = p0[k] - cfg.lr * gk / (std::abs(gk) + 1e-8);
        EXPECT_NEAR(p1[k], expected, 1e-12) << k;
    }
}

TEST(Train, DeterministicAndLossDecreases) {
    auto g = testing::random_graph(60, 4, 0.1, 7);
    const auto split = split_nodes(60, 2);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.hidden_dim = 16;
    cfg.lr = 0.01;
    const auto a = train(g, split, cfg);
    const auto b = train(g, split, cfg);
    EXPECT_EQ(a.model.flatten(), b.model.flatten());
    EXPECT_EQ(a.report.train_loss, b.report.train_loss);
    EXPECT_LT(a.report.train_loss.back(), a.report.train_loss.front());
    std::size_t calls = 0;
    train(g, split, TrainConfig{0.01, 1e-5, 0.2, 3, 4}, [&](std::size_t, double) { ++calls; });
    EXPECT_EQ(calls, 3u);
}

TEST(Train, RejectsBadConfig) {
    auto g = testing::random_graph(10, 4, 0.3, 1);
    const auto split = split_nodes(10);
    TrainConfig cfg;
    cfg.epochs = 0;
    EXPECT_THROW(train(g, split, cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.dropout = 1.0;
    EXPECT_THROW(train(g, split, cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.hidden_dim = 0;
    EXPECT_THROW(train(g, split, cfg), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = 1e300;
    cfg.epochs = 5;
    EXPECT_THROW(train(g, split, cfg), NonFinite);
}

TEST(Model, PermutationEquivariance) {
    const auto g = testing::random_graph(40, 4, 0.15, 21);
    Rng init(8);
    const auto model = SageModel::initialize(4, 12, init);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng shuffle(3);
    for (std::size_t i = 39; i > 0; --i) {
        std::swap(perm[i], perm[shuffle.below(i + 1)]);
    }
    // Node i of g becomes node perm[i] of the permuted graph.
    Matrix x(40, 4);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
            x(perm[i], c) = g.features(i, c);
        }
        y[perm[i]] = g.target[i];
    }
    EdgeIndex e;
    for (std::size_t k = g.edges.size(); k-- > 0;) {
        e.source.push_back(static_cast<std::int32_t>(perm[static_cast<std::size_t>(g.edges.source[k])]));
        e.target.push_back(static_cast<std::int32_t>(perm[static_cast<std::size_t>(g.edges.target[k])]));
        e.weight.push_back(g.edges.weight[k]);
    }
    const auto pg = PavementGraph::from_parts(x, e, y);
    const auto a = predict(model, g);
    const auto b = predict(model, pg);
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_NEAR(a[i], b[perm[i]], 1e-9);
    }
}

TEST(Checkpoint, RoundTripIsBitwise) {
    auto g = testing::random_graph(30, 4, 0.2, 6);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.hidden_dim = 32;
    auto model = train(g, split_nodes(30), cfg).model;
    const std::vector<std::string> cats{"asphalt", "concrete"};
    model.encoder = LabelEncoder::fit(cats);
    model.scaler = FeatureScaler::from_moments({1, 2, 3, 4}, {0.5, 1, 2, 0});
    testing::TempDir dir;
    save_checkpoint(model, dir / "m.json");
    const auto loaded = load_checkpoint(dir / "m.json");
    EXPECT_EQ(loaded.flatten(), model.flatten());
    EXPECT_EQ(loaded.hidden_dim(), 32u);
    EXPECT_EQ(loaded.scaler, model.scaler);
    EXPECT_EQ(loaded.encoder, model.encoder);
    EXPECT_EQ(loaded.config.seed, cfg.seed);
    EXPECT_EQ(predict(loaded, g), predict(model, g));
}

TEST(Checkpoint, RejectsTamperedOrMissing) {
    auto model = SageModel::zeros(4, 8);
    model.scaler = FeatureScaler::from_moments({0, 0, 0, 0}, {1, 1, 1, 1});
    model.encoder = LabelEncoder::from_categories({"a"});
    model.config.hidden_dim = 8;
    auto j = nlohmann::json::parse(checkpoint_json(model));
    EXPECT_NO_THROW(model_from_checkpoint_json(j.dump()));

    auto dims = j;
    dims["hidden_dim"] = 9;
    EXPECT_THROW(model_from_checkpoint_json(dims.dump()), SchemaVersionError);
    auto version = j;
    version["version"] = 99;
    EXPECT_THROW(model_from_checkpoint_json(version.dump()), SchemaVersionError);
    auto missing = j;
    missing.erase("head");
    EXPECT_THROW(model_from_checkpoint_json(missing.dump()), CorruptCheckpoint);
    EXPECT_THROW(model_from_checkpoint_json("{not json"), CorruptCheckpoint);
    testing::TempDir dir;
    EXPECT_THROW(load_checkpoint(dir / "absent.json"), MissingFile);
}

}  // namespace
}  // namespace pavetwin
