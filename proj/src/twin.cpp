#include "pavetwin/twin.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/sage.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace pavetwin {

using nlohmann::json;

std::string_view to_string(ActionKind kind) noexcept {
    switch (kind) {
    case ActionKind::Reconstruct:
        return "reconstruct";
    case ActionKind::Resurface:
        return "resurface";
    case ActionKind::Patch:
        return "patch";
    }
    return "patch";
}

ActionKind parse_action_kind(std::string_view name) {
    if (name == "reconstruct") {
        return ActionKind::Reconstruct;
    }
    if (name == "resurface") {
        return ActionKind::Resurface;
    }
    if (name == "patch") {
        return ActionKind::Patch;
    }
    throw ConfigError("unknown action kind '" + std::string(name) + "' (reconstruct, resurface, patch)");
}

std::string_view to_string(AlertKind kind) noexcept {
    return kind == AlertKind::ThresholdBreach ? "threshold_breach" : "rapid_drop";
}

double ActionEffects::cost(ActionKind kind) const noexcept {
    switch (kind) {
    case ActionKind::Reconstruct:
        return reconstruct_cost;
    case ActionKind::Resurface:
        return resurface_cost;
    case ActionKind::Patch:
        return patch_cost;
    }
    return 0.0;
}

void TwinConfig::validate() const {
    dynamics.validate();
    if (!std::isfinite(alert_threshold)) {
        throw ConfigError("alert threshold must be finite");
    }
    if (!std::isfinite(rapid_drop) || rapid_drop < 0.0) {
        throw ConfigError("rapid drop threshold must be finite and >= 0");
    }
    for (double v : {effects.resurface_gain, effects.patch_gain, effects.reconstruct_cost, effects.resurface_cost,
                     effects.patch_cost}) {
        if (!std::isfinite(v)) {
            throw ConfigError("action effects and costs must be finite");
        }
    }
}

namespace {

void check_segments(const PavementGraph& graph, std::span<const SegmentRecord> segments) {
    if (segments.size() != graph.node_count()) {
        throw DimensionError("twin: " + std::to_string(segments.size()) + " segments for a graph of " +
                             std::to_string(graph.node_count()) + " nodes");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].segment_id != graph.segment_ids[i]) {
            throw ValidationError("twin: segment order differs from graph node order at position " +
                                  std::to_string(i));
        }
    }
}

void check_action(const TwinState& state, const MaintenanceAction& action) {
    if (action.segment_ids.empty()) {
        throw ConfigError("maintenance action needs at least one segment");
    }
    for (auto id : action.segment_ids) {
        state.index_of(id);
    }
}

}  // namespace

TwinState init_twin(std::shared_ptr<const PavementGraph> graph, std::span<const SegmentRecord> segments,
                    std::span<const DistressRecord> history, const TwinConfig& cfg) {
    if (!graph) {
        throw ConfigError("twin needs a graph");
    }
    cfg.validate();
    check_segments(*graph, segments);
    TwinState state;
    state.graph = graph;
    state.segments.assign(segments.begin(), segments.end());
    state.condition = latest_distress_for(graph->segment_ids, history);
    for (auto& c : state.condition) {
        c = std::clamp(c, 0.0, 100.0);
    }
    std::int64_t month = 0;
    for (const auto& r : history) {
        month = std::max(month, r.month);
    }
    state.month = month;
    state.config = cfg;
    state.rng = Rng(cfg.seed);
    return state;
}

std::vector<Alert> step(TwinState& state, std::size_t n_months) {
    if (n_months < 1) {
        throw ConfigError("step needs n_months >= 1");
    }
    const auto& cfg = state.config;
    const std::size_t n = state.size();
    std::vector<Alert> raised;
    std::vector<double> decay(n);
    for (std::size_t m = 0; m < n_months; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = state.segments[i];
            decay[i] = monthly_decay(cfg.dynamics.decay, s.age_years, s.traffic_volume, s.material);
        }
        auto next = advance_month(state.condition, decay, state.graph->adjacency, cfg.dynamics.kappa,
                                  cfg.dynamics.noise_sd, state.rng);
        ++state.month;
        for (auto& s : state.segments) {
            s.age_years += 1.0 / 12.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double prev = state.condition[i];
            const double now = next[i];
            const auto id = state.segments[i].segment_id;
            if (prev >= cfg.alert_threshold && now < cfg.alert_threshold) {
                raised.push_back({state.next_alert_id++, id, state.month, now, cfg.alert_threshold,
                                  AlertKind::ThresholdBreach, false});
            }
            if (prev - now > cfg.rapid_drop) {
                raised.push_back(
                    {state.next_alert_id++, id, state.month, now, cfg.rapid_drop, AlertKind::RapidDrop, false});
            }
        }
        state.condition = std::move(next);
    }
    state.alerts.insert(state.alerts.end(), raised.begin(), raised.end());
    return raised;
}

void apply_action(TwinState& state, const MaintenanceAction& action) {
    check_action(state, action);
    const auto& fx = state.config.effects;
    for (auto id : action.segment_ids) {
        const auto i = state.index_of(id);
        double& c = state.condition[i];
        switch (action.kind) {
        case ActionKind::Reconstruct:
            c = 100.0;
            state.segments[i].age_years = 0.0;
            break;
        case ActionKind::Resurface:
            c = std::clamp(c + fx.resurface_gain, 0.0, 100.0);
            break;
        case ActionKind::Patch:
            c = std::clamp(c + fx.patch_gain, 0.0, 100.0);
            break;
        }
        state.maintenance_log.push_back({state.month, id, action.kind});
    }
}

PavementGraph forecast_graph(const TwinState& state, const SageModel& model) {
    const auto& base = *state.graph;
    PavementGraph g;
    g.segment_ids = base.segment_ids;
    g.index_of_id = base.index_of_id;
    g.raw_features = raw_feature_matrix(state.segments, model.encoder);
    g.features = model.scaler.transform(g.raw_features);
    g.edges = base.edges;
    g.adjacency = base.adjacency;
    g.target = state.condition;
    g.dropped_links = base.dropped_links;
    return g;
}

// --- scenarios -----------------------------------------------------------------

ScenarioFork fork(const TwinState& base, std::uint64_t fork_id) {
    ScenarioFork f;
    f.id = fork_id;
    f.base_month = base.month;
    f.start = base;
    f.start.rng = Rng::stream(base.config.seed, fork_id);
    return f;
}

void schedule(ScenarioFork& f, std::int64_t month_offset, MaintenanceAction action) {
    if (month_offset < 0) {
        throw ConfigError("scheduled month must be >= 0");
    }
    check_action(f.start, action);
    f.plan.push_back({month_offset, std::move(action)});
}

namespace {

TrajectoryPoint record(const TwinState& s, const SageModel& model, double cost) {
    TrajectoryPoint p;
    p.month = s.month;
    p.condition = s.condition;
    p.forecast = predict(model, forecast_graph(s, model));
    double sum = 0.0;
    for (double c : s.condition) {
        sum += c;
        if (c < s.config.alert_threshold) {
            ++p.below_threshold;
        }
    }
    p.mean_condition = s.condition.empty() ? 0.0 : sum / static_cast<double>(s.condition.size());
    p.cumulative_cost = cost;
    return p;
}

}  // namespace

const std::vector<TrajectoryPoint>& run_scenario(ScenarioFork& f, std::size_t horizon, const SageModel* model) {
    if (model == nullptr) {
        throw ModelMissing();
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    TwinState s = f.start;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<Alert> alerts;
    trajectory.reserve(horizon + 1);
    double cost = 0.0;
    auto apply_due = [&](std::int64_t offset) {
        for (const auto& p : f.plan) {
            if (p.month_offset == offset) {
                apply_action(s, p.action);
                cost += s.config.effects.cost(p.action.kind) * static_cast<double>(p.action.segment_ids.size());
            }
        }
    };
    apply_due(0);
    trajectory.push_back(record(s, *model, cost));
    for (std::size_t m = 1; m <= horizon; ++m) {
        auto raised = step(s, 1);
        alerts.insert(alerts.end(), raised.begin(), raised.end());
        apply_due(static_cast<std::int64_t>(m));
        trajectory.push_back(record(s, *model, cost));
    }
    f.trajectory = std::move(trajectory);
    f.alerts = std::move(alerts);
    f.total_cost = cost;
    f.final_state = std::move(s);
    return f.trajectory;
}

Comparison compare(std::span<const ScenarioFork* const> forks) {
    if (forks.size() < 2) {
        throw ConfigError("compare needs at least two scenarios");
    }
    for (const auto* f : forks) {
        if (f == nullptr || !f->has_run()) {
            throw ConfigError("compare: scenario " + (f ? std::to_string(f->id) : std::string("?")) +
                              " has not been run");
        }
    }
    const auto len = forks[0]->trajectory.size();
    for (const auto* f : forks) {
        if (f->trajectory.size() != len) {
            throw HorizonMismatch("compare: scenario " + std::to_string(f->id) + " has " +
                                  std::to_string(f->trajectory.size() - 1) + " months, expected " +
                                  std::to_string(len - 1));
        }
    }
    Comparison out;
    for (const auto* f : forks) {
        for (const auto& p : f->trajectory) {
            out.rows.push_back({f->id, p.month, p.mean_condition, p.below_threshold, p.cumulative_cost});
        }
        out.total_cost.emplace_back(f->id, f->total_cost);
    }
    return out;
}

// --- snapshots -----------------------------------------------------------------

std::string snapshot_json(const TwinState& s) {
    json j;
    j["month"] = s.month;
    json ids = json::array();
    json cond = json::array();
    json ages = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        ids.push_back(s.segments[i].segment_id);
        cond.push_back(s.condition[i]);
        ages.push_back(s.segments[i].age_years);
    }
    j["segment_ids"] = std::move(ids);
    j["condition"] = std::move(cond);
    j["age_years"] = std::move(ages);
    json log = json::array();
    for (const auto& e : s.maintenance_log) {
        log.push_back({{"month", e.month}, {"segment_id", e.segment_id}, {"action", to_string(e.kind)}});
    }
    j["maintenance_log"] = std::move(log);
    json alerts = json::array();
    for (const auto& a : s.alerts) {
        alerts.push_back({{"id", a.id},
                          {"segment_id", a.segment_id},
                          {"month", a.month},
                          {"score", a.score},
                          {"threshold", a.threshold},
                          {"kind", to_string(a.kind)},
                          {"dismissed", a.dismissed}});
    }
    j["alerts"] = std::move(alerts);
    j["next_alert_id"] = s.next_alert_id;
    const auto& c = s.config;
    j["config"] = {{"alpha_age", c.dynamics.decay.alpha_age},
                   {"beta_traffic", c.dynamics.decay.beta_traffic},
                   {"gamma_material", c.dynamics.decay.gamma_material},
                   {"gamma_default", c.dynamics.decay.gamma_default},
                   {"kappa", c.dynamics.kappa},
                   {"noise_sd", c.dynamics.noise_sd},
                   {"alert_threshold", c.alert_threshold},
                   {"rapid_drop", c.rapid_drop},
                   {"resurface_gain", c.effects.resurface_gain},
                   {"patch_gain", c.effects.patch_gain},
                   {"reconstruct_cost", c.effects.reconstruct_cost},
                   {"resurface_cost", c.effects.resurface_cost},
                   {"patch_cost", c.effects.patch_cost},
                   {"seed", c.seed}};
    const auto& st = s.rng.state();
    j["rng"] = json::array({st[0], st[1], st[2], st[3]});
    return j.dump();
}

TwinState restore_twin(const std::string& json_text, std::shared_ptr<const PavementGraph> graph,
                       std::span<const SegmentRecord> segments) {
    if (!graph) {
        throw ConfigError("twin needs a graph");
    }
    check_segments(*graph, segments);
    TwinState s;
    s.graph = graph;
    s.segments.assign(segments.begin(), segments.end());
    try {
        const json j = json::parse(json_text);
        s.month = j.at("month").get<std::int64_t>();
        const auto ids = j.at("segment_ids").get<std::vector<std::int64_t>>();
        const auto cond = j.at("condition").get<std::vector<double>>();
        const auto ages = j.at("age_years").get<std::vector<double>>();
        if (ids.size() != graph->node_count() || cond.size() != ids.size() || ages.size() != ids.size()) {
            throw CorruptCheckpoint("twin snapshot: segment count does not match the graph");
        }
        s.condition.assign(ids.size(), 0.0);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const auto i = graph->index_of(ids[k]);
            if (!std::isfinite(cond[k]) || cond[k] < 0.0 || cond[k] > 100.0) {
                throw CorruptCheckpoint("twin snapshot: condition out of range for segment " +
                                        std::to_string(ids[k]));
            }
            s.condition[i] = cond[k];
            s.segments[i].age_years = ages[k];
        }
        for (const auto& e : j.at("maintenance_log")) {
            s.maintenance_log.push_back({e.at("month").get<std::int64_t>(), e.at("segment_id").get<std::int64_t>(),
                                         parse_action_kind(e.at("action").get<std::string>())});
        }
        for (const auto& a : j.at("alerts")) {
            const auto kind = a.at("kind").get<std::string>();
            s.alerts.push_back({a.at("id").get<std::uint64_t>(), a.at("segment_id").get<std::int64_t>(),
                                a.at("month").get<std::int64_t>(), a.at("score").get<double>(),
                                a.at("threshold").get<double>(),
                                kind == "rapid_drop" ? AlertKind::RapidDrop : AlertKind::ThresholdBreach,
                                a.at("dismissed").get<bool>()});
        }
        s.next_alert_id = j.at("next_alert_id").get<std::uint64_t>();
        const auto& c = j.at("config");
        auto& cfg = s.config;
        cfg.dynamics.decay.alpha_age = c.at("alpha_age").get<double>();
        cfg.dynamics.decay.beta_traffic = c.at("beta_traffic").get<double>();
        cfg.dynamics.decay.gamma_material = c.at("gamma_material").get<std::map<std::string, double>>();
        cfg.dynamics.decay.gamma_default = c.at("gamma_default").get<double>();
        cfg.dynamics.kappa = c.at("kappa").get<double>();
        cfg.dynamics.noise_sd = c.at("noise_sd").get<double>();
        cfg.alert_threshold = c.at("alert_threshold").get<double>();
        cfg.rapid_drop = c.at("rapid_drop").get<double>();
        cfg.effects.resurface_gain = c.at("resurface_gain").get<double>();
        cfg.effects.patch_gain = c.at("patch_gain").get<double>();
        cfg.effects.reconstruct_cost = c.at("reconstruct_cost").get<double>();
        cfg.effects.resurface_cost = c.at("resurface_cost").get<double>();
        cfg.effects.patch_cost = c.at("patch_cost").get<double>();
        cfg.seed = c.at("seed").get<std::uint64_t>();
        const auto rng = j.at("rng").get<std::array<std::uint64_t, 4>>();
        s.rng.set_state(rng);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("twin snapshot: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptCheckpoint(std::string("twin snapshot: ") + e.what());
    }
    s.config.validate();
    return s;
}

}  // namespace pavetwin
