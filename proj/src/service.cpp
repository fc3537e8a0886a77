#include "pavetwin/service.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/experiment.hpp"
#include "pavetwin/records.hpp"

#include "httplib.h"
#include "json.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pavetwin {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

[[noreturn]] void fail(int status, std::string code, std::string message) {
    throw HttpError{status, std::move(code), std::move(message)};
}

ApiResponse reply(const json& body, std::uint64_t version, int status = 200) {
    return {status, body.dump(), version};
}

json parse_body(const std::string& body, bool allow_empty = false) {
    if (body.empty() && allow_empty) {
        return json::object();
    }
    try {
        auto j = json::parse(body);
        if (!j.is_object()) {
            fail(422, "invalid_body", "request body must be a JSON object");
        }
        return j;
    } catch (const json::exception& e) {
        fail(422, "invalid_body", std::string("malformed JSON: ") + e.what());
    }
}

std::int64_t positive_int(const json& body, const char* key) {
    if (!body.contains(key)) {
        fail(422, "invalid_body", std::string("missing '") + key + "'");
    }
    const auto& v = body.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        fail(422, "invalid_body", std::string("'") + key + "' must be an integer >= 1");
    }
    return v.get<std::int64_t>();
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') {
            ++i;
        }
        auto j = path.find('/', i);
        if (j == std::string_view::npos) {
            j = path.size();
        }
        if (j > i) {
            parts.push_back(path.substr(i, j - i));
        }
        i = j;
    }
    return parts;
}

json alert_json(const Alert& a) {
    return {{"id", a.id},
            {"segment_id", a.segment_id},
            {"month", a.month},
            {"score", a.score},
            {"threshold", a.threshold},
            {"kind", to_string(a.kind)}};
}

json trajectory_json(const ScenarioFork& f, const PavementGraph& graph) {
    json points = json::array();
    for (const auto& p : f.trajectory) {
        points.push_back({{"month", p.month},
                          {"mean_condition", p.mean_condition},
                          {"below_threshold", p.below_threshold},
                          {"cumulative_cost", p.cumulative_cost},
                          {"condition", p.condition},
                          {"forecast", p.forecast}});
    }
    json alerts = json::array();
    for (const auto& a : f.alerts) {
        alerts.push_back(alert_json(a));
    }
    return {{"id", f.id},
            {"base_month", f.base_month},
            {"horizon", f.trajectory.empty() ? 0 : f.trajectory.size() - 1},
            {"total_cost", f.total_cost},
            {"segment_ids", graph.segment_ids},
            {"points", std::move(points)},
            {"alerts", std::move(alerts)}};
}

json report_json(std::span<const EvalReport> rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"model", r.model}, {"mae", r.mae}, {"rmse", r.rmse}, {"r2", r.r2}, {"mse", r.mse}, {"n", r.n}});
    }
    return out;
}

}  // namespace

std::string fingerprint_files(std::span<const std::filesystem::path> files) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw MissingFile(path.string());
        }
        char buf[8192];
        while (in.read(buf, sizeof buf) || in.gcount() > 0) {
            for (std::streamsize k = 0; k < in.gcount(); ++k) {
                h ^= static_cast<unsigned char>(buf[k]);
                h *= 0x100000001b3ULL;
            }
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

TwinService::TwinService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.twin.validate();
    cfg_.baselines.validate();
    const auto data = load_dataset_dir(cfg_.data_dir);
    std::optional<PreparedData> prepared;
    if (!cfg_.checkpoint.empty()) {
        auto model = std::make_shared<SageModel>(load_checkpoint(cfg_.checkpoint));
        prepared = prepare(data, model->encoder, model->scaler);
        model_ = std::move(model);
    } else {
        prepared = prepare(data);
    }
    const std::filesystem::path files[] = {cfg_.data_dir / kSegmentsFile, cfg_.data_dir / kDistressFile,
                                           cfg_.data_dir / kConnectivityFile};
    fingerprint_ = fingerprint_files(files);
    segments_ = std::move(prepared->segments);
    history_ = std::move(prepared->distress);
    graph_ = std::make_shared<const PavementGraph>(std::move(prepared->graph));

    if (!cfg_.state_file.empty() && std::filesystem::exists(cfg_.state_file)) {
        std::ifstream in(cfg_.state_file, std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        state_ = std::make_shared<const TwinState>(restore_twin(text, graph_, segments_));
    } else {
        auto s = std::make_shared<const TwinState>(init_twin(graph_, segments_, history_, cfg_.twin));
        persist(*s);
        state_ = std::move(s);
    }
}

TwinService::~TwinService() = default;

std::shared_ptr<const TwinState> TwinService::base() const {
    std::shared_lock lock(state_mutex_);
    return state_;
}

std::string TwinService::base_snapshot() const { return snapshot_json(*base()); }

void TwinService::persist(const TwinState& state) const {
    if (cfg_.state_file.empty()) {
        return;
    }
    auto tmp = cfg_.state_file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write state file " + tmp.string());
        }
        out << snapshot_json(state);
    }
    std::filesystem::rename(tmp, cfg_.state_file);
}

template <class F>
ApiResponse TwinService::mutate_base(F&& mutate) {
    std::unique_lock writer(writer_, std::try_to_lock);
    if (!writer.owns_lock()) {
        fail(409, "conflict", "another base-twin mutation is in progress");
    }
    if (cfg_.mutation_delay.count() > 0) {
        std::this_thread::sleep_for(cfg_.mutation_delay);
    }
    auto next = std::make_shared<TwinState>(*base());
    json body = mutate(*next);
    persist(*next);
    std::uint64_t v = 0;
    {
        std::unique_lock lock(state_mutex_);
        state_ = std::move(next);
        v = ++version_;
    }
    body["version"] = v;
    return reply(body, v);
}

std::shared_ptr<TwinService::ForkEntry> TwinService::find_fork(std::uint64_t id) const {
    std::lock_guard lock(forks_mutex_);
    auto it = forks_.find(id);
    if (it == forks_.end()) {
        fail(404, "unknown_scenario", "no scenario with id " + std::to_string(id));
    }
    return it->second;
}

ApiResponse TwinService::handle(const ApiRequest& request) {
    try {
        return route(request);
    } catch (const HttpError& e) {
        return reply({{"code", e.code}, {"message", e.message}}, version(), e.status);
    } catch (const UnknownSegment& e) {
        return reply({{"code", "unknown_segment"}, {"message", e.what()}}, version(), 404);
    } catch (const ModelMissing& e) {
        return reply({{"code", "model_missing"}, {"message", e.what()}}, version(), 503);
    } catch (const ConfigError& e) {
        return reply({{"code", "invalid_body"}, {"message", e.what()}}, version(), 422);
    } catch (const HorizonMismatch& e) {
        return reply({{"code", "horizon_mismatch"}, {"message", e.what()}}, version(), 422);
    } catch (const json::exception& e) {
        return reply({{"code", "invalid_body"}, {"message", e.what()}}, version(), 422);
    } catch (const std::exception& e) {
        return reply({{"code", "internal"}, {"message", e.what()}}, version(), 500);
    }
}

ApiResponse TwinService::route(const ApiRequest& req) {
    const auto parts = split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    auto id_at = [&](std::size_t k) -> std::uint64_t {
        auto v = parse_number<std::uint64_t>(parts[k]);
        if (!v) {
            fail(404, "not_found", "bad id '" + std::string(parts[k]) + "'");
        }
        return *v;
    };
    if (parts.size() < 2 || parts[0] != "api") {
        fail(404, "not_found", "no route for " + req.path);
    }
    const auto n = parts.size();
    const auto& top = parts[1];
    if (top == "network" && n == 2 && get) {
        return get_network();
    }
    if (top == "predictions" && n == 2 && get) {
        return get_predictions();
    }
    if (top == "alerts" && n == 2 && get) {
        return get_alerts();
    }
    if (top == "alerts" && n == 4 && parts[3] == "dismiss" && post) {
        return post_dismiss(id_at(2));
    }
    if (top == "report" && n == 2 && get) {
        return get_report();
    }
    if (top == "health" && n == 2 && get) {
        return get_health();
    }
    if (top == "segments" && n == 4 && parts[3] == "history" && get) {
        auto id = parse_number<std::int64_t>(parts[2]);
        if (!id) {
            fail(404, "unknown_segment", "bad segment id '" + std::string(parts[2]) + "'");
        }
        return get_history(*id);
    }
    if (top == "twin" && n == 3 && parts[2] == "step" && post) {
        return post_step(req.body);
    }
    if (top == "scenarios") {
        if (n == 2 && post) {
            return post_scenario(req.body);
        }
        if (n == 3 && parts[2] == "compare" && get) {
            auto it = req.query.find("ids");
            return get_compare(it == req.query.end() ? std::string() : it->second);
        }
        if (n == 4 && parts[3] == "actions" && post) {
            return post_action(id_at(2), req.body);
        }
        if (n == 4 && parts[3] == "run" && post) {
            return post_run(id_at(2), req.body);
        }
        if (n == 4 && parts[3] == "trajectory" && get) {
            return get_trajectory(id_at(2));
        }
    }
    fail(404, "not_found", "no route for " + req.method + " " + req.path);
}

ApiResponse TwinService::get_network() const {
    std::shared_ptr<const TwinState> s;
    std::uint64_t v = 0;
    {
        std::shared_lock lock(state_mutex_);
        s = state_;
        v = version_.load();
    }
    const auto& g = *graph_;
    json nodes = json::array();
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const auto raw = g.raw_features.row(i);
        const auto scaled = g.features.row(i);
        const auto& seg = s->segments[i];
        nodes.push_back({{"id", g.segment_ids[i]},
                         {"material", seg.material},
                         {"length_m", seg.length_m},
                         {"age_years", seg.age_years},
                         {"traffic_volume", seg.traffic_volume},
                         {"features_raw", std::vector<double>(raw.begin(), raw.end())},
                         {"features_scaled", std::vector<double>(scaled.begin(), scaled.end())},
                         {"condition", s->condition[i]}});
    }
    json edges = json::array();
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        edges.push_back({{"source", g.segment_ids[static_cast<std::size_t>(g.edges.source[k])]},
                         {"target", g.segment_ids[static_cast<std::size_t>(g.edges.target[k])]},
                         {"weight", g.edges.weight[k]}});
    }
    return reply({{"month", s->month}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}}, v);
}

ApiResponse TwinService::get_history(std::int64_t segment_id) const {
    std::shared_ptr<const TwinState> s;
    std::uint64_t v = 0;
    {
        std::shared_lock lock(state_mutex_);
        s = state_;
        v = version_.load();
    }
    const auto i = graph_->index_of(segment_id);
    std::vector<const DistressRecord*> rows;
    for (const auto& r : history_) {
        if (r.segment_id == segment_id) {
            rows.push_back(&r);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->month < b->month; });
    json series = json::array();
    for (const auto* r : rows) {
        series.push_back({{"month", r->month}, {"distress_level", r->distress_level}});
    }
    json body = {{"segment_id", segment_id},
                 {"history", std::move(series)},
                 {"current", {{"month", s->month}, {"condition", s->condition[i]}}}};
    if (model_) {
        const auto pred = predict(*model_, forecast_graph(*s, *model_));
        body["prediction"] = {{"month", s->month}, {"value", pred[i]}};
    } else {
        body["prediction"] = nullptr;
    }
    return reply(body, v);
}

ApiResponse TwinService::get_predictions() const {
    if (!model_) {
        throw ModelMissing();
    }
    std::shared_ptr<const TwinState> s;
    std::uint64_t v = 0;
    {
        std::shared_lock lock(state_mutex_);
        s = state_;
        v = version_.load();
    }
    const auto pred = predict(*model_, forecast_graph(*s, *model_));
    json rows = json::array();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        rows.push_back({{"segment_id", graph_->segment_ids[i]}, {"prediction", pred[i]}});
    }
    return reply({{"month", s->month}, {"predictions", std::move(rows)}}, v);
}

ApiResponse TwinService::get_alerts() const {
    std::shared_ptr<const TwinState> s;
    std::uint64_t v = 0;
    {
        std::shared_lock lock(state_mutex_);
        s = state_;
        v = version_.load();
    }
    json rows = json::array();
    for (auto it = s->alerts.rbegin(); it != s->alerts.rend(); ++it) {
        if (!it->dismissed) {
            rows.push_back(alert_json(*it));
        }
    }
    return reply({{"month", s->month}, {"alerts", std::move(rows)}}, v);
}

ApiResponse TwinService::post_step(const std::string& body) {
    const auto months = positive_int(parse_body(body), "months");
    return mutate_base([&](TwinState& s) {
        const auto raised = step(s, static_cast<std::size_t>(months));
        json alerts = json::array();
        for (const auto& a : raised) {
            alerts.push_back(alert_json(a));
        }
        return json{{"month", s.month}, {"alerts", std::move(alerts)}};
    });
}

ApiResponse TwinService::post_dismiss(std::uint64_t alert_id) {
    {
        auto s = base();
        const bool known = std::any_of(s->alerts.begin(), s->alerts.end(), [&](const Alert& a) { return a.id == alert_id; });
        if (!known) {
            fail(404, "unknown_alert", "no alert with id " + std::to_string(alert_id));
        }
    }
    return mutate_base([&](TwinState& s) {
        for (auto& a : s.alerts) {
            if (a.id == alert_id) {
                a.dismissed = true;
            }
        }
        return json{{"id", alert_id}, {"dismissed", true}};
    });
}

ApiResponse TwinService::post_scenario(const std::string& body) {
    parse_body(body, true);
    auto s = base();
    auto entry = std::make_shared<ForkEntry>();
    std::uint64_t id = 0;
    {
        std::lock_guard lock(forks_mutex_);
        id = next_fork_id_++;
        entry->fork = fork(*s, id);
        forks_.emplace(id, entry);
    }
    return reply({{"id", id}, {"base_month", entry->fork.base_month}}, version(), 201);
}

ApiResponse TwinService::post_action(std::uint64_t fork_id, const std::string& body) {
    auto entry = find_fork(fork_id);
    const auto j = parse_body(body);
    if (!j.contains("month") || !j["month"].is_number_integer() || j["month"].get<std::int64_t>() < 0) {
        fail(422, "invalid_body", "'month' must be an integer >= 0");
    }
    if (!j.contains("kind") || !j["kind"].is_string()) {
        fail(422, "invalid_body", "'kind' must be one of reconstruct, resurface, patch");
    }
    if (!j.contains("segment_ids") || !j["segment_ids"].is_array() || j["segment_ids"].empty()) {
        fail(422, "invalid_body", "'segment_ids' must be a non-empty array");
    }
    MaintenanceAction action;
    action.kind = parse_action_kind(j["kind"].get<std::string>());
    for (const auto& id : j["segment_ids"]) {
        if (!id.is_number_integer()) {
            fail(422, "invalid_body", "segment ids must be integers");
        }
        action.segment_ids.push_back(id.get<std::int64_t>());
    }
    std::lock_guard lock(entry->mutex);
    schedule(entry->fork, j["month"].get<std::int64_t>(), std::move(action));
    return reply({{"id", fork_id}, {"planned_actions", entry->fork.plan.size()}}, version(), 201);
}

ApiResponse TwinService::post_run(std::uint64_t fork_id, const std::string& body) {
    auto entry = find_fork(fork_id);
    const auto horizon = positive_int(parse_body(body), "horizon");
    if (!model_) {
        throw ModelMissing();
    }
    std::lock_guard lock(entry->mutex);
    run_scenario(entry->fork, static_cast<std::size_t>(horizon), model_.get());
    entry->horizon = static_cast<std::size_t>(horizon);
    return reply(trajectory_json(entry->fork, *graph_), version());
}

ApiResponse TwinService::get_trajectory(std::uint64_t fork_id) const {
    auto entry = find_fork(fork_id);
    std::lock_guard lock(entry->mutex);
    if (!entry->fork.has_run()) {
        fail(409, "not_run", "scenario " + std::to_string(fork_id) + " has not been run");
    }
    return reply(trajectory_json(entry->fork, *graph_), version());
}

ApiResponse TwinService::get_compare(const std::string& ids) const {
    std::vector<std::uint64_t> wanted;
    std::string_view rest = ids;
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto tok = rest.substr(0, comma);
        auto v = parse_number<std::uint64_t>(tok);
        if (!v) {
            fail(422, "invalid_query", "ids must be a comma-separated list of scenario ids");
        }
        wanted.push_back(*v);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (wanted.size() < 2) {
        fail(422, "invalid_query", "compare needs at least two scenario ids");
    }
    std::vector<std::shared_ptr<ForkEntry>> entries;
    for (auto id : wanted) {
        entries.push_back(find_fork(id));
    }
    // Copy each fork under its own lock, then compare the copies.
    std::vector<ScenarioFork> copies;
    for (auto& e : entries) {
        std::lock_guard lock(e->mutex);
        if (!e->fork.has_run()) {
            fail(409, "not_run", "scenario " + std::to_string(e->fork.id) + " has not been run");
        }
        copies.push_back(e->fork);
    }
    std::vector<const ScenarioFork*> ptrs;
    for (const auto& c : copies) {
        ptrs.push_back(&c);
    }
    const auto cmp = compare(ptrs);
    json rows = json::array();
    for (const auto& r : cmp.rows) {
        rows.push_back({{"id", r.fork_id},
                        {"month", r.month},
                        {"mean_condition", r.mean_condition},
                        {"below_threshold", r.below_threshold},
                        {"cumulative_cost", r.cumulative_cost}});
    }
    json totals = json::array();
    for (const auto& [id, cost] : cmp.total_cost) {
        totals.push_back({{"id", id}, {"total_cost", cost}});
    }
    return reply({{"rows", std::move(rows)}, {"total_cost", std::move(totals)}}, version());
}

ApiResponse TwinService::get_report() {
    if (!model_) {
        throw ModelMissing();
    }
    std::lock_guard lock(report_mutex_);
    if (!report_body_) {
        const auto split = split_nodes(graph_->node_count(), cfg_.split_seed);
        const auto cmp = compare_models(*graph_, *model_, split, cfg_.baselines);
        json body = {{"split_seed", cfg_.split_seed},
                     {"n_test", split.test.size()},
                     {"rows", report_json(cmp.test)},
                     {"csv", report_csv(cmp.test)}};
        report_body_ = body.dump();
    }
    return {200, *report_body_, version()};
}

ApiResponse TwinService::get_health() const {
    json body = {{"status", "ok"},
                 {"version", kServiceVersion},
                 {"state_version", version()},
                 {"dataset_fingerprint", fingerprint_},
                 {"segments", graph_->node_count()},
                 {"model_seed", model_ ? json(model_->config.seed) : json(nullptr)}};
    return reply(body, version());
}

// --- HTTP front end ------------------------------------------------------------

HttpServer::HttpServer(TwinService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest api;
        api.method = req.method;
        api.path = req.path;
        for (const auto& [k, v] : req.params) {
            api.query.emplace(k, v);
        }
        api.body = req.body;
        const auto out = service_.handle(api);
        res.status = out.status;
        res.set_header(std::string(kVersionHeader), std::to_string(out.version));
        res.set_content(out.body, "application/json");
    };
    server_->Get(".*", handler);
    server_->Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

void HttpServer::run(const std::string& host, int port) {
    if (!server_->bind_to_port(host, port)) {
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    }
    server_->listen_after_bind();
}

}  // namespace pavetwin
