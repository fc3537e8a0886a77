#pragma once

#include "pavetwin/matrix.hpp"
#include "pavetwin/pipeline.hpp"
#include "pavetwin/records.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace pavetwin {

struct CleanedConnectivity {
    std::vector<ConnectivityRecord> records;
    std::size_t dropped = 0;
};

/// Keeps links whose endpoints are both known, distinct, and whose weight is
/// finite and > 0. Repeated ordered pairs keep their first occurrence.
CleanedConnectivity clean_connectivity(std::span<const ConnectivityRecord> records,
                                       const std::unordered_set<std::int64_t>& known_ids);

/// Latest (max month) score per segment.
std::map<std::int64_t, double> latest_distress(std::span<const DistressRecord> distress);

/// Latest score for each id in `segment_ids`, in that order. Throws MissingTarget.
std::vector<double> latest_distress_for(std::span<const std::int64_t> segment_ids,
                                        std::span<const DistressRecord> distress);

/// Adds (v, u, w) for every (u, v, w) whose reverse is absent. Existing
/// reverse links keep their own weight. Input must be deduplicated and loop-free.
std::vector<ConnectivityRecord> symmetrize(std::span<const ConnectivityRecord> edges);

/// COO edge list over dense node indices: edge k goes source[k] -> target[k].
struct EdgeIndex {
    std::vector<std::int32_t> source;
    std::vector<std::int32_t> target;
    std::vector<double> weight;

    std::size_t size() const noexcept { return source.size(); }
    friend bool operator==(const EdgeIndex&, const EdgeIndex&) = default;
};

/// Incoming-neighbor lists (CSR keyed by target), each sorted ascending.
class Adjacency {
public:
    Adjacency() = default;
    static Adjacency from_edges(std::size_t node_count, const EdgeIndex& edges);

    std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::span<const std::int32_t> neighbors(std::size_t i) const noexcept {
        return {sources_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const double> weights(std::size_t i) const noexcept {
        return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::size_t degree(std::size_t i) const noexcept { return offsets_[i + 1] - offsets_[i]; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::int32_t> sources_;
    std::vector<double> weights_;
};

struct PavementGraph {
    std::vector<std::int64_t> segment_ids;  // dense index -> segment id
    std::unordered_map<std::int64_t, std::size_t> index_of_id;
    Matrix raw_features;                    // N x 4, unscaled
    Matrix features;                        // N x 4, standardized
    EdgeIndex edges;
    Adjacency adjacency;
    std::vector<double> target;             // raw condition scores
    std::size_t dropped_links = 0;

    std::size_t node_count() const noexcept { return segment_ids.size(); }
    /// Throws UnknownSegment.
    std::size_t index_of(std::int64_t segment_id) const;

    /// Assembles a graph from dense parts. Edges must be in range, loop-free
    /// and without repeated ordered pairs (ValidationError otherwise). Segment
    /// ids default to 0..N-1 and raw features to `features`.
    static PavementGraph from_parts(Matrix features, EdgeIndex edges, std::vector<double> target,
                                    std::vector<std::int64_t> segment_ids = {});
};

/// Sources j of every edge j -> i, ascending. Throws IndexError.
std::vector<std::int32_t> neighbors(const PavementGraph& graph, std::size_t i);

/// Builds the standardized, symmetrized graph. Node order follows `segments`.
/// Throws MissingTarget, DimensionError (scaler not 4-wide), UnknownCategory.
PavementGraph build_graph(std::span<const SegmentRecord> segments, std::span<const DistressRecord> distress,
                          std::span<const ConnectivityRecord> connectivity, const FeatureScaler& scaler,
                          const LabelEncoder& encoder);

/// Everything downstream consumers need from one dataset.
struct PreparedData {
    std::vector<SegmentRecord> segments;
    std::vector<DistressRecord> distress;
    std::vector<ConnectivityRecord> connectivity;
    LabelEncoder encoder;
    FeatureScaler scaler;
    PavementGraph graph;
};

/// impute -> validate -> fit encoder -> fit scaler on all rows -> build_graph.
PreparedData prepare(const Datasets& data);
/// Same, but with an already fitted encoder and scaler (e.g. from a checkpoint).
PreparedData prepare(const Datasets& data, const LabelEncoder& encoder, const FeatureScaler& scaler);

}  // namespace pavetwin
