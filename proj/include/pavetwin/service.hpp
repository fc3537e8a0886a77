#pragma once

#include "pavetwin/baselines.hpp"
#include "pavetwin/graph.hpp"
#include "pavetwin/metrics.hpp"
#include "pavetwin/sage.hpp"
#include "pavetwin/twin.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>

namespace httplib {
class Server;
}

namespace pavetwin {

inline constexpr std::string_view kServiceVersion = "0.1.0";
inline constexpr std::string_view kVersionHeader = "X-Twin-Version";

struct ServiceConfig {
    std::filesystem::path data_dir;
    std::filesystem::path checkpoint;   // empty = no model; prediction endpoints answer 503
    std::filesystem::path state_file;   // empty = no persistence
    std::string host = "127.0.0.1";
    int port = 8080;
    TwinConfig twin;
    BaselineSpec baselines;
    std::uint64_t split_seed = 42;
    // Test hook: base-twin mutations hold the writer slot this long.
    std::chrono::milliseconds mutation_delay{0};
};

struct ApiRequest {
    std::string method;  // "GET" / "POST"
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;           // JSON
    std::uint64_t version = 0;  // base-twin version after the request
};

/// In-memory API session: dataset, model, base twin and open scenario forks.
///
/// GETs read immutable snapshots under a shared lock. Base-twin mutations
/// are computed on a copy while holding the writer slot; a second writer
/// arriving meanwhile is rejected with 409 rather than queued.
class TwinService {
public:
    /// Loads the data (and checkpoint, if given) and restores the state file
    /// when it exists. Throws the loaders' errors.
    explicit TwinService(ServiceConfig cfg);
    ~TwinService();

    TwinService(const TwinService&) = delete;
    TwinService& operator=(const TwinService&) = delete;

    ApiResponse handle(const ApiRequest& request);

    std::uint64_t version() const noexcept { return version_.load(); }
    /// Canonical serialization of the base twin.
    std::string base_snapshot() const;
    /// FNV-1a of the three data files, hex.
    const std::string& dataset_fingerprint() const noexcept { return fingerprint_; }
    const PavementGraph& graph() const noexcept { return *graph_; }

private:
    struct ForkEntry {
        std::mutex mutex;
        ScenarioFork fork;
        std::optional<std::size_t> horizon;
    };

    ApiResponse route(const ApiRequest& request);

    ApiResponse get_network() const;
    ApiResponse get_history(std::int64_t segment_id) const;
    ApiResponse get_predictions() const;
    ApiResponse get_alerts() const;
    ApiResponse post_step(const std::string& body);
    ApiResponse post_dismiss(std::uint64_t alert_id);
    ApiResponse post_scenario(const std::string& body);
    ApiResponse post_action(std::uint64_t fork_id, const std::string& body);
    ApiResponse post_run(std::uint64_t fork_id, const std::string& body);
    ApiResponse get_trajectory(std::uint64_t fork_id) const;
    ApiResponse get_compare(const std::string& ids) const;
    ApiResponse get_report();
    ApiResponse get_health() const;

    std::shared_ptr<ForkEntry> find_fork(std::uint64_t id) const;
    std::shared_ptr<const TwinState> base() const;
    /// Runs `mutate` on a copy of the base twin and publishes it. 409 when busy.
    template <class F>
    ApiResponse mutate_base(F&& mutate);
    void persist(const TwinState& state) const;

    ServiceConfig cfg_;
    std::shared_ptr<const PavementGraph> graph_;
    std::vector<SegmentRecord> segments_;
    std::vector<DistressRecord> history_;
    std::shared_ptr<const SageModel> model_;
    std::string fingerprint_;

    mutable std::shared_mutex state_mutex_;
    std::shared_ptr<const TwinState> state_;
    std::mutex writer_;
    std::atomic<std::uint64_t> version_{0};

    mutable std::mutex forks_mutex_;
    std::map<std::uint64_t, std::shared_ptr<ForkEntry>> forks_;
    std::uint64_t next_fork_id_ = 1;

    std::mutex report_mutex_;
    std::optional<std::string> report_body_;
};

/// HTTP front end for a TwinService on a background thread.
class HttpServer {
public:
    explicit HttpServer(TwinService& service);
    ~HttpServer();

    /// Binds and starts listening; port 0 picks a free port. Throws ConfigError
    /// if the address cannot be bound.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks in the calling thread until stop() is called from elsewhere.
    void run(const std::string& host, int port);

private:
    TwinService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

/// FNV-1a 64-bit over the bytes of each file in order, as 16 hex digits.
/// Throws MissingFile.
std::string fingerprint_files(std::span<const std::filesystem::path> files);

}  // namespace pavetwin
