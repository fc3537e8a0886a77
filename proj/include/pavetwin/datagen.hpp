#pragma once

#include "pavetwin/dynamics.hpp"
#include "pavetwin/records.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pavetwin {

/// Synthetic network shape and deterioration parameters.
struct GenConfig {
    std::size_t n_segments = 1000;
    std::size_t n_undirected_edges = 6000;
    std::size_t months = 24;
    std::uint64_t seed = 42;
    DynamicsConfig dynamics;

    /// Throws ConfigError.
    void validate() const;
    /// Edges used by the ring backbone: N for N >= 3, N - 1 otherwise.
    std::size_t backbone_edges() const noexcept;
};

/// Ids 1..N. length ~ U[50, 2000] m (2 dp), age ~ U{0..40}, traffic ~
/// LogU[100, 50000] (1 dp), material asphalt/concrete/composite at 0.6/0.3/0.1.
std::vector<SegmentRecord> generate_segments(const GenConfig& cfg);

/// Ring backbone (i, i+1 mod N) over positions, then uniformly random extra
/// unordered pairs without replacement; one directed record per pair,
/// weight ~ U(0.1, 1.0]. Throws ConfigError when the edge count is infeasible.
std::vector<ConnectivityRecord> generate_connectivity(const GenConfig& cfg, std::span<const std::int64_t> segment_ids);

/// Month 0..months-1 trajectory per segment, segment-major order.
std::vector<DistressRecord> simulate_distress(const GenConfig& cfg, std::span<const SegmentRecord> segments,
                                              std::span<const ConnectivityRecord> connectivity);

struct GeneratedDataset {
    std::vector<SegmentRecord> segments;
    std::vector<DistressRecord> distress;
    std::vector<ConnectivityRecord> connectivity;
};

GeneratedDataset generate_dataset(const GenConfig& cfg);
void write_dataset(const std::filesystem::path& dir, const GeneratedDataset& data);

}  // namespace pavetwin
