#pragma once

#include "pavetwin/dynamics.hpp"
#include "pavetwin/graph.hpp"
#include "pavetwin/records.hpp"
#include "pavetwin/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pavetwin {

struct SageModel;

enum class ActionKind { Reconstruct, Resurface, Patch };

std::string_view to_string(ActionKind kind) noexcept;
/// Throws ConfigError on an unknown name.
ActionKind parse_action_kind(std::string_view name);

/// Condition changes and unit costs of maintenance actions.
struct ActionEffects {
    double resurface_gain = 25.0;
    double patch_gain = 10.0;
    double reconstruct_cost = 100.0;
    double resurface_cost = 40.0;
    double patch_cost = 10.0;

    double cost(ActionKind kind) const noexcept;
};

struct MaintenanceAction {
    ActionKind kind = ActionKind::Patch;
    std::vector<std::int64_t> segment_ids;
};

struct LogEntry {
    std::int64_t month = 0;
    std::int64_t segment_id = 0;
    ActionKind kind = ActionKind::Patch;

    friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

enum class AlertKind { ThresholdBreach, RapidDrop };

std::string_view to_string(AlertKind kind) noexcept;

struct Alert {
    std::uint64_t id = 0;
    std::int64_t segment_id = 0;
    std::int64_t month = 0;
    double score = 0.0;
    double threshold = 0.0;
    AlertKind kind = AlertKind::ThresholdBreach;
    bool dismissed = false;

    friend bool operator==(const Alert&, const Alert&) = default;
};

struct TwinConfig {
    DynamicsConfig dynamics;
    double alert_threshold = 40.0;
    // A fall of more than this many PCI points in one month raises rapid_drop.
    double rapid_drop = 10.0;
    ActionEffects effects;
    std::uint64_t seed = 42;

    /// Throws ConfigError.
    void validate() const;
};

/// Live twin: per-segment condition in [0, 100] over a fixed topology.
///
/// Segment ages advance by 1/12 year per simulated month and reset to 0 on
/// reconstruction; the monthly decay uses the current age.
struct TwinState {
    std::int64_t month = 0;
    std::shared_ptr<const PavementGraph> graph;  // immutable topology, shared by forks
    std::vector<SegmentRecord> segments;         // current attributes, graph node order
    std::vector<double> condition;
    std::vector<LogEntry> maintenance_log;
    std::vector<Alert> alerts;
    std::uint64_t next_alert_id = 1;
    TwinConfig config;
    Rng rng{0};

    std::size_t size() const noexcept { return condition.size(); }
    /// Throws UnknownSegment.
    std::size_t index_of(std::int64_t segment_id) const { return graph->index_of(segment_id); }
};

/// Conditions start at each segment's latest observation; the month is the
/// latest month in the history. Throws MissingTarget, ConfigError.
TwinState init_twin(std::shared_ptr<const PavementGraph> graph, std::span<const SegmentRecord> segments,
                    std::span<const DistressRecord> history, const TwinConfig& cfg);

/// Advances n_months (>= 1, ConfigError otherwise) and returns the alerts raised.
std::vector<Alert> step(TwinState& state, std::size_t n_months);

/// Applies the action at the current month and logs it. Validates every id
/// first (UnknownSegment) so a failed call changes nothing.
void apply_action(TwinState& state, const MaintenanceAction& action);

/// Features of the twin's current segments, scaled with the model's artifacts,
/// on the twin's topology with the current conditions as targets.
PavementGraph forecast_graph(const TwinState& state, const SageModel& model);

// --- what-if scenarios ---------------------------------------------------------------

struct PlannedAction {
    std::int64_t month_offset = 0;  // 0 = before the first simulated month
    MaintenanceAction action;
};

struct TrajectoryPoint {
    std::int64_t month = 0;
    std::vector<double> condition;
    std::vector<double> forecast;
    double mean_condition = 0.0;
    std::size_t below_threshold = 0;
    double cumulative_cost = 0.0;
};

struct ScenarioFork {
    std::uint64_t id = 0;
    std::int64_t base_month = 0;
    TwinState start;  // copy of the base with its own RNG stream
    std::vector<PlannedAction> plan;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<Alert> alerts;
    double total_cost = 0.0;
    std::optional<TwinState> final_state;

    bool has_run() const noexcept { return final_state.has_value(); }
};

/// Deep copy of `base`; the fork RNG is stream `fork_id` of the base seed.
ScenarioFork fork(const TwinState& base, std::uint64_t fork_id);

/// Adds an action to the plan. Throws UnknownSegment, ConfigError.
void schedule(ScenarioFork& fork, std::int64_t month_offset, MaintenanceAction action);

/// Replays the plan from the fork start for `horizon` months. The trajectory
/// has horizon + 1 points: offset 0 (after month-0 actions) through horizon.
/// Each point carries the simulated condition and the model forecast.
/// Throws ModelMissing, ConfigError.
const std::vector<TrajectoryPoint>& run_scenario(ScenarioFork& fork, std::size_t horizon, const SageModel* model);

struct ComparisonRow {
    std::uint64_t fork_id = 0;
    std::int64_t month = 0;
    double mean_condition = 0.0;
    std::size_t below_threshold = 0;
    double cumulative_cost = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;        // fork-major, month ascending
    std::vector<std::pair<std::uint64_t, double>> total_cost;
};

/// Needs >= 2 forks that have run (ConfigError); trajectories must have equal
/// length (HorizonMismatch).
Comparison compare(std::span<const ScenarioFork* const> forks);

// --- serialization -------------------------------------------------------------------

/// Canonical JSON snapshot (month, conditions, ages, log, alerts, config, RNG state).
std::string snapshot_json(const TwinState& state);
/// Restores a snapshot onto `graph`. Throws CorruptCheckpoint, UnknownSegment.
TwinState restore_twin(const std::string& json_text, std::shared_ptr<const PavementGraph> graph,
                       std::span<const SegmentRecord> segments);

}  // namespace pavetwin
