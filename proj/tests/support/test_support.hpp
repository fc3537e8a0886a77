#pragma once

#include "pavetwin/datagen.hpp"
#include "pavetwin/graph.hpp"
#include "pavetwin/records.hpp"
#include "pavetwin/rng.hpp"

#include <filesystem>
#include <string>

namespace pavetwin::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "pavetwin");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

Datasets to_datasets(const GeneratedDataset& data);

/// Generated dataset run through prepare().
PreparedData make_prepared(const GenConfig& cfg);

/// Symmetric random graph with N(0,1) features (standardized == raw) and
/// uniform targets in [0, 100]. Each unordered pair is linked with probability p.
PavementGraph random_graph(std::size_t n, std::size_t feature_dim, double p, std::uint64_t seed);

}  // namespace pavetwin::testing
