#include "pavetwin/datagen.hpp"
#include "pavetwin/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace pavetwin {
namespace {

std::vector<std::int64_t> ids_of(const std::vector<SegmentRecord>& segs) {
    std::vector<std::int64_t> ids;
    for (const auto& s : segs) {
        ids.push_back(s.segment_id);
    }
    return ids;
}

// Union-find connectivity check over segment ids.
bool connected(std::size_t n, const std::vector<ConnectivityRecord>& links) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            x = parent[x] = parent[parent[x]];
        }
        return x;
    };
    for (const auto& l : links) {
        parent[find(static_cast<std::size_t>(l.from_id - 1))] = find(static_cast<std::size_t>(l.to_id - 1));
    }
    const auto root = find(0);
    for (std::size_t i = 1; i < n; ++i) {
        if (find(i) != root) {
            return false;
        }
    }
    return true;
}

TEST(GenerateSegments, DeterministicAndInRange) {
    GenConfig cfg;
    const auto a = generate_segments(cfg);
    const auto b = generate_segments(cfg);
    EXPECT_EQ(a, b);
    ASSERT_EQ(a.size(), 1000u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& s = a[i];
        EXPECT_EQ(s.segment_id, static_cast<std::int64_t>(i) + 1);
        EXPECT_GE(s.length_m, 50.0);
        EXPECT_LE(s.length_m, 2000.0);
        EXPECT_EQ(s.age_years, std::floor(s.age_years));
        EXPECT_GE(s.age_years, 0.0);
        EXPECT_LE(s.age_years, 40.0);
        EXPECT_GE(s.traffic_volume, 100.0);
        EXPECT_LE(s.traffic_volume, 50000.0);
        EXPECT_TRUE(s.material == "asphalt" || s.material == "concrete" || s.material == "composite");
    }
}

TEST(GenerateSegments, SingleSegment) {
    GenConfig cfg;
    cfg.n_segments = 1;
    cfg.n_undirected_edges = 0;
    const auto a = generate_segments(cfg);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_GE(a[0].length_m, 50.0);
}

TEST(GenerateSegments, MaterialProportions) {
    GenConfig cfg;
    cfg.n_segments = 10000;
    cfg.n_undirected_edges = 10000;
    std::map<std::string, double> count;
    for (const auto& s : generate_segments(cfg)) {
        count[s.material] += 1.0;
    }
    EXPECT_NEAR(count["asphalt"] / 10000, 0.6, 0.02);
    EXPECT_NEAR(count["concrete"] / 10000, 0.3, 0.02);
    EXPECT_NEAR(count["composite"] / 10000, 0.1, 0.02);
}

TEST(GenerateConnectivity, DefaultsConnectedWithoutRepeats) {
    GenConfig cfg;
    const auto segs = generate_segments(cfg);
    const auto links = generate_connectivity(cfg, ids_of(segs));
    ASSERT_EQ(links.size(), 6000u);
    std::set<std::pair<std::int64_t, std::int64_t>> pairs;
    for (const auto& l : links) {
        EXPECT_NE(l.from_id, l.to_id);
        EXPECT_GT(l.weight, 0.1);
        EXPECT_LE(l.weight, 1.0);
        EXPECT_TRUE(pairs.emplace(std::min(l.from_id, l.to_id), std::max(l.from_id, l.to_id)).second);
    }
    EXPECT_TRUE(connected(1000, links));
}

TEST(GenerateConnectivity, TriangleAndDense) {
    GenConfig cfg;
    cfg.n_segments = 3;
    cfg.n_undirected_edges = 3;
    auto links = generate_connectivity(cfg, std::vector<std::int64_t>{1, 2, 3});
    std::set<std::pair<std::int64_t, std::int64_t>> pairs;
    for (const auto& l : links) {
        pairs.emplace(std::min(l.from_id, l.to_id), std::max(l.from_id, l.to_id));
    }
    EXPECT_EQ(pairs, (std::set<std::pair<std::int64_t, std::int64_t>>{{1, 2}, {1, 3}, {2, 3}}));

    cfg.n_segments = 20;
    cfg.n_undirected_edges = 190;  // complete graph
    std::vector<std::int64_t> ids(20);
    std::iota(ids.begin(), ids.end(), std::int64_t{1});
    EXPECT_EQ(generate_connectivity(cfg, ids).size(), 190u);
}

TEST(GenConfig, InfeasibleEdgeCounts) {
    GenConfig cfg;
    cfg.n_segments = 10;
    cfg.n_undirected_edges = 46;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.n_undirected_edges = 9;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.n_segments = 2;
    cfg.n_undirected_edges = 1;
    EXPECT_NO_THROW(cfg.validate());
    cfg.dynamics.kappa = -0.1;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SimulateDistress, FrozenDynamicsConstant) {
    GenConfig cfg;
    cfg.n_segments = 30;
    cfg.n_undirected_edges = 60;
    cfg.dynamics.kappa = 0.0;
    cfg.dynamics.noise_sd = 0.0;
    cfg.dynamics.decay = DecayCoefficients::zero();
    const auto d = generate_dataset(cfg).distress;
    ASSERT_EQ(d.size(), 30u * 24u);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t t = 1; t < 24; ++t) {
            EXPECT_EQ(d[i * 24 + t].distress_level, d[i * 24].distress_level);
        }
    }
}

TEST(SimulateDistress, MonotoneDecayWithoutCoupling) {
    GenConfig cfg;
    cfg.n_segments = 50;
    cfg.n_undirected_edges = 100;
    cfg.months = 60;
    cfg.dynamics.kappa = 0.0;
    cfg.dynamics.noise_sd = 0.0;
    const auto d = generate_dataset(cfg).distress;
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t t = 1; t < 60; ++t) {
            const double prev = d[i * 60 + t - 1].distress_level;
            const double now = d[i * 60 + t].distress_level;
            if (prev > 0.0) {
                EXPECT_LT(now, prev);
            } else {
                EXPECT_EQ(now, 0.0);
            }
        }
    }
}

TEST(SimulateDistress, TwoNodeContraction) {
    GenConfig cfg;
    cfg.n_segments = 2;
    cfg.n_undirected_edges = 1;
    cfg.months = 10;
    cfg.dynamics.kappa = 0.5;
    cfg.dynamics.noise_sd = 0.0;
    cfg.dynamics.decay = DecayCoefficients::zero();
    const std::vector<SegmentRecord> segs{{1, 100, "asphalt", 0, 100}, {2, 100, "asphalt", 125, 100}};
    const std::vector<ConnectivityRecord> link{{1, 2, 1.0}};
    const auto d = simulate_distress(cfg, segs, link);
    // Hand iteration: a' = a + k(b - a), b' = b + k(a - b); k = 0.5 meets in one step.
    double a = 100.0, b = 0.0;
    EXPECT_EQ(d[0].distress_level, a);
    EXPECT_EQ(d[10].distress_level, b);
    for (std::size_t t = 1; t < 10; ++t) {
        const double na = a + 0.5 * (b - a);
        const double nb = b + 0.5 * (a - b);
        a = na;
        b = nb;
        EXPECT_DOUBLE_EQ(d[t].distress_level, a);
        EXPECT_DOUBLE_EQ(d[10 + t].distress_level, b);
    }
    EXPECT_DOUBLE_EQ(d[1].distress_level, 50.0);

    cfg.dynamics.kappa = 0.2;
    const auto e = simulate_distress(cfg, segs, link);
    for (std::size_t t = 1; t < 10; ++t) {
        const double gap_prev = e[t - 1].distress_level - e[10 + t - 1].distress_level;
        const double gap = e[t].distress_level - e[10 + t].distress_level;
        EXPECT_GE(gap, 0.0);
        EXPECT_LT(gap, gap_prev);
    }
}

TEST(SimulateDistress, MatchesIndependentRecurrence) {
    GenConfig cfg;
    cfg.n_segments = 40;
    cfg.n_undirected_edges = 90;
    cfg.months = 12;
    cfg.seed = 5;
    const auto data = generate_dataset(cfg);
    const std::size_t n = 40;

    std::vector<std::set<std::size_t>> nb(n);
    for (const auto& l : data.connectivity) {
        nb[static_cast<std::size_t>(l.from_id - 1)].insert(static_cast<std::size_t>(l.to_id - 1));
        nb[static_cast<std::size_t>(l.to_id - 1)].insert(static_cast<std::size_t>(l.from_id - 1));
    }
    const std::map<std::string, double> gamma{{"asphalt", 0.35}, {"composite", 0.25}, {"concrete", 0.15}};
    std::vector<double> decay(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data.segments[i];
        decay[i] = 0.6 * s.age_years / 40.0 + 0.5 * std::log10(s.traffic_volume) / 5.0 + gamma.at(s.material);
    }
    Rng rng = Rng::stream(cfg.seed, 2);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = std::clamp(100.0 - 0.8 * data.segments[i].age_years + 1.5 * rng.normal(), 0.0, 100.0);
    }
    for (std::size_t t = 0; t < 12; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(data.distress[i * 12 + t].distress_level, c[i], 1e-12) << "node " << i << " month " << t;
        }
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (auto j : nb[i]) {
                mean += c[j];
            }
            mean /= static_cast<double>(nb[i].size());
            next[i] = std::clamp(c[i] - decay[i] + 0.3 * (mean - c[i]) + 1.5 * rng.normal(), 0.0, 100.0);
        }
        c = next;
    }
}

TEST(Dynamics, DecayFormula) {
    DecayCoefficients d;
    EXPECT_NEAR(monthly_decay(d, 20, 1000, "asphalt"), 0.3 + 0.3 + 0.35, 1e-15);
    EXPECT_NEAR(monthly_decay(d, 0, 0.5, "unknown"), 0.25, 1e-15);
}

TEST(WriteDataset, RoundTripsThroughLoader) {
    GenConfig cfg;
    cfg.n_segments = 25;
    cfg.n_undirected_edges = 40;
    const auto data = generate_dataset(cfg);
    testing::TempDir dir;
    write_dataset(dir.path(), data);
    const auto loaded = load_dataset_dir(dir.path());
    EXPECT_EQ(loaded.distress, data.distress);
    EXPECT_EQ(loaded.connectivity, data.connectivity);
    ASSERT_EQ(loaded.segments.size(), 25u);
    for (std::size_t i = 0; i < 25; ++i) {
        EXPECT_EQ(*loaded.segments[i].length_m, data.segments[i].length_m);
        EXPECT_EQ(*loaded.segments[i].traffic_volume, data.segments[i].traffic_volume);
    }
}

}  // namespace
}  // namespace pavetwin
