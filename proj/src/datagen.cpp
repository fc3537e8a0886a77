#include "pavetwin/datagen.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace pavetwin {

namespace {

// Independent RNG streams so changing one knob does not reshuffle the others.
enum Stream : std::uint64_t { kSegments = 0, kConnectivity = 1, kDistress = 2 };

double round_to(double x, double scale) { return std::round(x * scale) / scale; }

std::uint64_t pair_key(std::size_t a, std::size_t b, std::size_t n) {
    const auto lo = std::min(a, b);
    const auto hi = std::max(a, b);
    return static_cast<std::uint64_t>(lo) * n + hi;
}

}  // namespace

std::size_t GenConfig::backbone_edges() const noexcept {
    return n_segments >= 3 ? n_segments : (n_segments == 0 ? 0 : n_segments - 1);
}

void GenConfig::validate() const {
    if (n_segments < 1) {
        throw ConfigError("n_segments must be >= 1");
    }
    if (months < 1) {
        throw ConfigError("months must be >= 1");
    }
    const std::uint64_t pair_bound = static_cast<std::uint64_t>(n_segments) * (n_segments - 1) / 2;
    if (n_undirected_edges > pair_bound) {
        throw ConfigError(std::to_string(n_undirected_edges) + " edges exceed the " + std::to_string(pair_bound) +
                          " possible pairs for " + std::to_string(n_segments) + " segments");
    }
    if (n_undirected_edges < backbone_edges()) {
        throw ConfigError(std::to_string(n_undirected_edges) + " edges cannot hold the " +
                          std::to_string(backbone_edges()) + "-edge ring backbone");
    }
    dynamics.validate();
}

std::vector<SegmentRecord> generate_segments(const GenConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::stream(cfg.seed, kSegments);
    const double log_lo = std::log(100.0);
    const double log_hi = std::log(50000.0);

    std::vector<SegmentRecord> out;
    out.reserve(cfg.n_segments);
    for (std::size_t i = 0; i < cfg.n_segments; ++i) {
        SegmentRecord s;
        s.segment_id = static_cast<std::int64_t>(i) + 1;
        s.length_m = round_to(rng.uniform(50.0, 2000.0), 100.0);
        s.age_years = static_cast<double>(rng.below(41));
        s.traffic_volume = round_to(std::exp(rng.uniform(log_lo, log_hi)), 10.0);
        const double u = rng.uniform();
        s.material = u < 0.6 ? "asphalt" : (u < 0.9 ? "concrete" : "composite");
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ConnectivityRecord> generate_connectivity(const GenConfig& cfg,
                                                      std::span<const std::int64_t> segment_ids) {
    cfg.validate();
    const std::size_t n = segment_ids.size();
    if (n != cfg.n_segments) {
        throw ConfigError("segment id count does not match n_segments");
    }
    Rng rng = Rng::stream(cfg.seed, kConnectivity);
    auto weight = [&rng] { return 1.0 - 0.9 * rng.uniform(); };

    std::vector<ConnectivityRecord> out;
    out.reserve(cfg.n_undirected_edges);
    std::unordered_set<std::uint64_t> used;
    used.reserve(cfg.n_undirected_edges * 2);

    auto emit = [&](std::size_t a, std::size_t b) {
        used.insert(pair_key(a, b, n));
        out.push_back({segment_ids[a], segment_ids[b], weight()});
    };

    const std::size_t backbone = cfg.backbone_edges();
    for (std::size_t i = 0; i < backbone; ++i) {
        emit(i, (i + 1) % n);
    }

    std::size_t remaining = cfg.n_undirected_edges - backbone;
    const std::uint64_t free_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2 - backbone;
    if (remaining == 0) {
        return out;
    }
    if (remaining * 2 <= free_pairs) {
        // Sparse request: rejection sampling terminates quickly.
        while (remaining > 0) {
            const auto a = static_cast<std::size_t>(rng.below(n));
            const auto b = static_cast<std::size_t>(rng.below(n));
            if (a == b || used.contains(pair_key(a, b, n))) {
                continue;
            }
            emit(a, b);
            --remaining;
        }
        return out;
    }
    // Dense request: enumerate the free pairs and take a partial shuffle.
    std::vector<std::pair<std::size_t, std::size_t>> pool;
    pool.reserve(free_pairs);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (!used.contains(pair_key(a, b, n))) {
                pool.emplace_back(a, b);
            }
        }
    }
    for (std::size_t k = 0; k < remaining; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
        std::swap(pool[k], pool[j]);
        emit(pool[k].first, pool[k].second);
    }
    return out;
}

std::vector<DistressRecord> simulate_distress(const GenConfig& cfg, std::span<const SegmentRecord> segments,
                                              std::span<const ConnectivityRecord> connectivity) {
    cfg.validate();
    const std::size_t n = segments.size();
    Rng rng = Rng::stream(cfg.seed, kDistress);
    const auto& dyn = cfg.dynamics;

    const Adjacency adjacency = link_adjacency(segments, connectivity);
    std::vector<double> decay(n);
    std::vector<double> condition(n);
    for (std::size_t i = 0; i < n; ++i) {
        decay[i] = monthly_decay(dyn.decay, segments[i].age_years, segments[i].traffic_volume, segments[i].material);
        condition[i] = initial_condition(segments[i].age_years, dyn.noise_sd, rng);
    }

    std::vector<std::vector<double>> by_month;
    by_month.reserve(cfg.months);
    by_month.push_back(condition);
    for (std::size_t t = 1; t < cfg.months; ++t) {
        condition = advance_month(condition, decay, adjacency, dyn.kappa, dyn.noise_sd, rng);
        by_month.push_back(condition);
    }

    std::vector<DistressRecord> out;
    out.reserve(n * cfg.months);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < cfg.months; ++t) {
            out.push_back({segments[i].segment_id, static_cast<std::int64_t>(t), by_month[t][i]});
        }
    }
    return out;
}

GeneratedDataset generate_dataset(const GenConfig& cfg) {
    GeneratedDataset data;
    data.segments = generate_segments(cfg);
    std::vector<std::int64_t> ids;
    ids.reserve(data.segments.size());
    for (const auto& s : data.segments) {
        ids.push_back(s.segment_id);
    }
    data.connectivity = generate_connectivity(cfg, ids);
    data.distress = simulate_distress(cfg, data.segments, data.connectivity);
    return data;
}

void write_dataset(const std::filesystem::path& dir, const GeneratedDataset& data) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create " + dir.string() + ": " + ec.message());
    }
    write_segments_csv(dir / kSegmentsFile, data.segments);
    write_distress_csv(dir / kDistressFile, data.distress);
    write_connectivity_csv(dir / kConnectivityFile, data.connectivity);
}

}  // namespace pavetwin
