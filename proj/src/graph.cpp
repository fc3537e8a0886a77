#include "pavetwin/graph.hpp"

#include "pavetwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace pavetwin {

CleanedConnectivity clean_connectivity(std::span<const ConnectivityRecord> records,
                                       const std::unordered_set<std::int64_t>& known_ids) {
    CleanedConnectivity out;
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& r : records) {
        const bool valid = r.from_id != r.to_id && known_ids.contains(r.from_id) && known_ids.contains(r.to_id) &&
                           std::isfinite(r.weight) && r.weight > 0.0;
        if (!valid || !seen.emplace(r.from_id, r.to_id).second) {
            ++out.dropped;
            continue;
        }
        out.records.push_back(r);
    }
    return out;
}

std::map<std::int64_t, double> latest_distress(std::span<const DistressRecord> distress) {
    std::map<std::int64_t, std::pair<std::int64_t, double>> best;
    for (const auto& d : distress) {
        auto [it, inserted] = best.try_emplace(d.segment_id, d.month, d.distress_level);
        if (!inserted && d.month > it->second.first) {
            it->second = {d.month, d.distress_level};
        }
    }
    std::map<std::int64_t, double> out;
    for (const auto& [id, entry] : best) {
        out.emplace(id, entry.second);
    }
    return out;
}

std::vector<double> latest_distress_for(std::span<const std::int64_t> segment_ids,
                                        std::span<const DistressRecord> distress) {
    const auto latest = latest_distress(distress);
    std::vector<double> out;
    out.reserve(segment_ids.size());
    for (auto id : segment_ids) {
        auto it = latest.find(id);
        if (it == latest.end()) {
            throw MissingTarget(id);
        }
        out.push_back(it->second);
    }
    return out;
}

std::vector<ConnectivityRecord> symmetrize(std::span<const ConnectivityRecord> edges) {
    std::set<std::pair<std::int64_t, std::int64_t>> present;
    for (const auto& e : edges) {
        present.emplace(e.from_id, e.to_id);
    }
    std::vector<ConnectivityRecord> out(edges.begin(), edges.end());
    for (const auto& e : edges) {
        if (present.emplace(e.to_id, e.from_id).second) {
            out.push_back({e.to_id, e.from_id, e.weight});
        }
    }
    return out;
}

Adjacency Adjacency::from_edges(std::size_t node_count, const EdgeIndex& edges) {
    Adjacency adj;
    adj.offsets_.assign(node_count + 1, 0);
    for (auto t : edges.target) {
        ++adj.offsets_[static_cast<std::size_t>(t) + 1];
    }
    std::partial_sum(adj.offsets_.begin(), adj.offsets_.end(), adj.offsets_.begin());

    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(edges.target[a], edges.source[a]) < std::pair(edges.target[b], edges.source[b]);
    });
    adj.sources_.reserve(edges.size());
    adj.weights_.reserve(edges.size());
    for (auto k : order) {
        adj.sources_.push_back(edges.source[k]);
        adj.weights_.push_back(edges.weight[k]);
    }
    return adj;
}

std::size_t PavementGraph::index_of(std::int64_t segment_id) const {
    auto it = index_of_id.find(segment_id);
    if (it == index_of_id.end()) {
        throw UnknownSegment(segment_id);
    }
    return it->second;
}

PavementGraph PavementGraph::from_parts(Matrix features, EdgeIndex edges, std::vector<double> target,
                                        std::vector<std::int64_t> segment_ids) {
    const std::size_t n = features.rows();
    if (target.size() != n) {
        throw ShapeError("target length " + std::to_string(target.size()) + " != node count " + std::to_string(n));
    }
    if (edges.source.size() != edges.target.size() || edges.weight.size() != edges.source.size()) {
        throw ShapeError("edge_index arrays differ in length");
    }
    if (segment_ids.empty() && n > 0) {
        segment_ids.resize(n);
        std::iota(segment_ids.begin(), segment_ids.end(), std::int64_t{0});
    }
    if (segment_ids.size() != n) {
        throw ShapeError("segment id count != node count");
    }
    std::set<std::pair<std::int32_t, std::int32_t>> seen;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto s = edges.source[k];
        const auto t = edges.target[k];
        if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= n || static_cast<std::size_t>(t) >= n) {
            throw ValidationError("edge " + std::to_string(k) + " out of range");
        }
        if (s == t) {
            throw ValidationError("self-loop at node " + std::to_string(s));
        }
        if (!seen.emplace(s, t).second) {
            throw ValidationError("duplicate edge " + std::to_string(s) + "->" + std::to_string(t));
        }
    }

    PavementGraph g;
    g.segment_ids = std::move(segment_ids);
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.index_of_id.emplace(g.segment_ids[i], i).second) {
            throw ValidationError("duplicate segment id " + std::to_string(g.segment_ids[i]));
        }
    }
    g.raw_features = features;
    g.features = std::move(features);
    g.adjacency = Adjacency::from_edges(n, edges);
    g.edges = std::move(edges);
    g.target = std::move(target);
    return g;
}

std::vector<std::int32_t> neighbors(const PavementGraph& graph, std::size_t i) {
    if (i >= graph.node_count()) {
        throw IndexError("node index " + std::to_string(i) + " out of range [0, " +
                         std::to_string(graph.node_count()) + ")");
    }
    auto nb = graph.adjacency.neighbors(i);
    return {nb.begin(), nb.end()};
}

PavementGraph build_graph(std::span<const SegmentRecord> segments, std::span<const DistressRecord> distress,
                          std::span<const ConnectivityRecord> connectivity, const FeatureScaler& scaler,
                          const LabelEncoder& encoder) {
    if (scaler.fitted() && scaler.means().size() != kFeatureCount) {
        throw DimensionError("expected " + std::to_string(kFeatureCount) + " features, scaler has " +
                             std::to_string(scaler.means().size()));
    }
    std::vector<std::int64_t> ids;
    ids.reserve(segments.size());
    for (const auto& s : segments) {
        ids.push_back(s.segment_id);
    }
    auto target = latest_distress_for(ids, distress);

    Matrix raw = raw_feature_matrix(segments, encoder);
    Matrix scaled = scaler.transform(raw);

    const std::unordered_set<std::int64_t> known(ids.begin(), ids.end());
    auto cleaned = clean_connectivity(connectivity, known);
    const auto directed = symmetrize(cleaned.records);

    std::unordered_map<std::int64_t, std::int32_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        index.emplace(ids[i], static_cast<std::int32_t>(i));
    }
    EdgeIndex edges;
    edges.source.reserve(directed.size());
    edges.target.reserve(directed.size());
    edges.weight.reserve(directed.size());
    for (const auto& e : directed) {
        edges.source.push_back(index.at(e.from_id));
        edges.target.push_back(index.at(e.to_id));
        edges.weight.push_back(e.weight);
    }

    auto graph = PavementGraph::from_parts(std::move(scaled), std::move(edges), std::move(target), std::move(ids));
    graph.raw_features = std::move(raw);
    graph.dropped_links = cleaned.dropped;
    return graph;
}

PreparedData prepare(const Datasets& data) {
    auto segments = impute(data.segments);
    std::vector<std::string> materials;
    materials.reserve(segments.size());
    for (const auto& s : segments) {
        materials.push_back(s.material);
    }
    const auto encoder = LabelEncoder::fit(materials);
    const auto scaler = FeatureScaler::fit(raw_feature_matrix(segments, encoder));
    return prepare(data, encoder, scaler);
}

PreparedData prepare(const Datasets& data, const LabelEncoder& encoder, const FeatureScaler& scaler) {
    PreparedData out;
    out.segments = impute(data.segments);
    validate_segments(out.segments);
    validate_distress(data.distress);
    out.distress = data.distress;
    out.connectivity = data.connectivity;
    out.encoder = encoder;
    out.scaler = scaler;
    out.graph = build_graph(out.segments, out.distress, out.connectivity, scaler, encoder);
    return out;
}

}  // namespace pavetwin
