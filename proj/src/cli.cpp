#include "pavetwin/cli.hpp"

#include "pavetwin/baselines.hpp"
#include "pavetwin/csv.hpp"
#include "pavetwin/datagen.hpp"
#include "pavetwin/errors.hpp"
#include "pavetwin/experiment.hpp"
#include "pavetwin/graph.hpp"
#include "pavetwin/metrics.hpp"
#include "pavetwin/sage.hpp"
#include "pavetwin/service.hpp"
#include "pavetwin/twin.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace pavetwin {

using nlohmann::json;

namespace {

struct GenerateOpts {
    std::size_t nodes = 1000;
    std::size_t edges = 6000;
    std::size_t months = 24;
    std::uint64_t seed = 42;
    double kappa = 0.3;
    double noise = 1.5;
    std::string out_dir = "data";
};

struct TrainOpts {
    std::string data_dir = "data";
    TrainConfig train;
    std::string out = "model.json";
    std::string report;
};

struct EvalOpts {
    std::string data_dir = "data";
    std::string checkpoint = "model.json";
    std::uint64_t seed = 42;
    std::string out_dir = ".";
    BaselineSpec baselines;
};

struct SimulateOpts {
    std::string data_dir = "data";
    std::string checkpoint = "model.json";
    std::size_t horizon = 24;
    std::string scenario;
    std::string out = "trajectory.csv";
    std::uint64_t seed = 42;
    std::uint64_t fork_id = 1;
    double kappa = 0.3;
    double noise = 1.5;
    double alert_threshold = 40.0;
};

struct ServeOpts {
    std::string data_dir = "data";
    std::string checkpoint = "model.json";
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string state_file;
    std::uint64_t seed = 42;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Flat key=value config file; '#' starts a comment, quotes around values are dropped.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty() || line.front() == '[') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

// Inserts config-file values for options not given on the command line.
std::vector<std::string> apply_config(CLI::App& app, std::vector<std::string> args) {
    if (args.empty()) {
        return args;
    }
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands({})) {
        if (s->get_name() == args[0]) {
            sub = s;
        }
    }
    if (sub == nullptr) {
        return args;
    }
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty()) {
        return args;
    }
    std::vector<std::string> injected;
    for (const auto& [key, value] : read_config_file(config_path)) {
        const std::string flag = "--" + key;
        auto* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config") {
            throw ConfigError("config file " + config_path + ": unknown key '" + key + "'");
        }
        const bool given = std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (given) {
            continue;
        }
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1") {
                injected.push_back(flag);
            } else if (value != "false" && value != "0") {
                throw ConfigError("config file " + config_path + ": '" + key + "' expects true or false");
            }
        } else {
            injected.push_back(flag);
            injected.push_back(value);
        }
    }
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    return args;
}

// --- subcommands -----------------------------------------------------------------

int cmd_generate(const GenerateOpts& o, std::ostream& out) {
    GenConfig cfg;
    cfg.n_segments = o.nodes;
    cfg.n_undirected_edges = o.edges;
    cfg.months = o.months;
    cfg.seed = o.seed;
    cfg.dynamics.kappa = o.kappa;
    cfg.dynamics.noise_sd = o.noise;
    cfg.validate();
    const auto data = generate_dataset(cfg);
    write_dataset(o.out_dir, data);
    out << "wrote " << data.segments.size() << " segments, " << data.distress.size() << " distress records, "
        << data.connectivity.size() << " links to " << o.out_dir << '\n';
    return 0;
}

std::string train_report_json(const TrainReport& r, const NodeSplit& split, const TrainConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["dropout"] = cfg.dropout;
    j["hidden_dim"] = cfg.hidden_dim;
    j["seed"] = cfg.seed;
    j["n_train"] = split.train.size();
    j["n_test"] = split.test.size();
    j["initial_train_loss"] = r.train_loss.empty() ? 0.0 : r.train_loss.front();
    j["final_train_loss"] = r.train_loss.empty() ? 0.0 : r.train_loss.back();
    j["final_train_mse"] = r.final_train_mse;
    j["final_test_mse"] = r.final_test_mse;
    j["wall_seconds"] = r.wall_seconds;
    j["train_loss"] = r.train_loss;
    return j.dump(2);
}

int cmd_train(const TrainOpts& o, std::ostream& out) {
    o.train.validate();
    auto data = prepare(load_dataset_dir(o.data_dir));
    const auto split = split_nodes(data.graph.node_count(), o.train.seed);
    auto result = train(data.graph, split, o.train, [&](std::size_t epoch, double loss) {
        if ((epoch + 1) % 100 == 0 || epoch == 0) {
            out << "epoch " << (epoch + 1) << " loss " << loss << '\n';
        }
    });
    result.model.scaler = data.scaler;
    result.model.encoder = data.encoder;
    save_checkpoint(result.model, o.out);
    std::filesystem::path report = o.report;
    if (report.empty()) {
        report = o.out + ".report.json";
    }
    write_text(report, train_report_json(result.report, split, o.train) + "\n");
    out << "train mse " << result.report.final_train_mse << ", test mse " << result.report.final_test_mse << " ("
        << result.report.wall_seconds << " s)\n";
    out << "wrote " << o.out << " and " << report.string() << '\n';
    return 0;
}

int cmd_eval(const EvalOpts& o, std::ostream& out) {
    o.baselines.validate();
    const auto model = load_checkpoint(o.checkpoint);
    const auto data = prepare(load_dataset_dir(o.data_dir), model.encoder, model.scaler);
    const auto split = split_nodes(data.graph.node_count(), o.seed);
    auto spec = o.baselines;
    spec.seed = o.seed;
    const auto cmp = compare_models(data.graph, model, split, spec);
    const std::filesystem::path dir = o.out_dir;
    write_text(dir / "report.csv", report_csv(cmp.test));
    write_text(dir / "predictions.csv", scatter_csv(cmp, data.graph));
    out << report_table(cmp.test);
    out << "wrote " << (dir / "report.csv").string() << " and " << (dir / "predictions.csv").string() << '\n';
    return 0;
}

struct Scenario {
    std::vector<PlannedAction> actions;
    std::optional<std::size_t> horizon;
};

Scenario read_scenario(const std::string& path) {
    Scenario s;
    if (path.empty()) {
        return s;
    }
    json j;
    try {
        j = json::parse(read_text(path));
        if (j.contains("horizon")) {
            const auto h = j.at("horizon").get<std::int64_t>();
            if (h < 1) {
                throw ConfigError("scenario horizon must be >= 1");
            }
            s.horizon = static_cast<std::size_t>(h);
        }
        for (const auto& a : j.value("actions", json::array())) {
            PlannedAction p;
            p.month_offset = a.at("month").get<std::int64_t>();
            p.action.kind = parse_action_kind(a.at("kind").get<std::string>());
            p.action.segment_ids = a.at("segment_ids").get<std::vector<std::int64_t>>();
            s.actions.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw ConfigError("scenario file " + path + ": " + e.what());
    }
    return s;
}

int cmd_simulate(const SimulateOpts& o, bool horizon_given, std::ostream& out) {
    TwinConfig tc;
    tc.seed = o.seed;
    tc.alert_threshold = o.alert_threshold;
    tc.dynamics.kappa = o.kappa;
    tc.dynamics.noise_sd = o.noise;
    tc.validate();
    const auto scenario = read_scenario(o.scenario);
    std::size_t horizon = horizon_given || !scenario.horizon ? o.horizon : *scenario.horizon;
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    const auto model = load_checkpoint(o.checkpoint);
    auto data = prepare(load_dataset_dir(o.data_dir), model.encoder, model.scaler);
    auto graph = std::make_shared<const PavementGraph>(std::move(data.graph));
    const auto base = init_twin(graph, data.segments, data.distress, tc);
    auto f = fork(base, o.fork_id);
    for (const auto& p : scenario.actions) {
        schedule(f, p.month_offset, p.action);
    }
    const auto& traj = run_scenario(f, horizon, &model);

    std::ostringstream csv_out;
    csv_out << "month,segment_id,condition,forecast\n";
    for (const auto& p : traj) {
        for (std::size_t i = 0; i < p.condition.size(); ++i) {
            csv_out << p.month << ',' << graph->segment_ids[i] << ',' << csv::format_double(p.condition[i]) << ','
                    << csv::format_double(p.forecast[i]) << '\n';
        }
    }
    write_text(o.out, csv_out.str());
    out << "month,mean_condition,below_threshold,cumulative_cost\n";
    for (const auto& p : traj) {
        out << p.month << ',' << csv::format_double(p.mean_condition) << ',' << p.below_threshold << ','
            << csv::format_double(p.cumulative_cost) << '\n';
    }
    out << "alerts " << f.alerts.size() << ", total cost " << f.total_cost << ", wrote " << o.out << '\n';
    return 0;
}

int cmd_serve(ServeOpts o, std::ostream& out) {
    if (const char* env = std::getenv("PAVETWIN_PORT"); env != nullptr && *env != '\0') {
        int port = 0;
        const std::string_view sv(env);
        auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), port);
        if (ec != std::errc{} || p != sv.data() + sv.size() || port < 1 || port > 65535) {
            throw ConfigError("PAVETWIN_PORT must be a port number, got '" + std::string(sv) + "'");
        }
        o.port = port;
    }
    ServiceConfig cfg;
    cfg.data_dir = o.data_dir;
    cfg.checkpoint = o.checkpoint;
    cfg.state_file = o.state_file;
    cfg.host = o.host;
    cfg.port = o.port;
    cfg.twin.seed = o.seed;
    cfg.baselines.seed = o.seed;
    cfg.split_seed = o.seed;
    TwinService service(cfg);
    HttpServer server(service);
    out << "serving " << service.graph().node_count() << " segments on http://" << o.host << ':' << o.port << '\n'
        << std::flush;
    server.run(o.host, o.port);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pavetwin: pavement network digital twin with a graph neural network forecaster", "pavetwin"};
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic dataset (segments, distress, connectivity CSVs)");
    g->add_option("--nodes", gen.nodes, "Number of road segments")->capture_default_str();
    g->add_option("--edges", gen.edges, "Undirected links, including the ring backbone")->capture_default_str();
    g->add_option("--months", gen.months, "Months of distress history per segment")->capture_default_str();
    g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    g->add_option("--kappa", gen.kappa, "Spatial coupling toward the neighbor mean, per month")
        ->capture_default_str();
    g->add_option("--noise", gen.noise, "Monthly noise standard deviation (PCI points)")->capture_default_str();
    g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

    TrainOpts tr;
    auto* t = app.add_subcommand("train", "Train the graph model and write a checkpoint and a training report");
    t->add_option("--data-dir", tr.data_dir, "Directory with the three dataset CSVs")->capture_default_str();
    t->add_option("--epochs", tr.train.epochs, "Full-graph training epochs")->capture_default_str();
    t->add_option("--lr", tr.train.lr, "Adam learning rate")->capture_default_str();
    t->add_option("--weight-decay", tr.train.weight_decay, "L2 weight decay added to the gradient")
        ->capture_default_str();
    t->add_option("--dropout", tr.train.dropout, "Dropout rate after the first layer, in [0, 1)")
        ->capture_default_str();
    t->add_option("--hidden-dim", tr.train.hidden_dim, "Hidden units per layer")->capture_default_str();
    t->add_option("--seed", tr.train.seed, "Seed for initialization, dropout and the 80/20 node split")
        ->capture_default_str();
    t->add_flag("--weighted-agg", tr.train.weighted_aggregation, "Average neighbors with their link weights")
        ->capture_default_str();
    t->add_option("--out", tr.out, "Checkpoint path (JSON)")->capture_default_str();
    t->add_option("--report", tr.report, "Training report path (JSON); default <out>.report.json");

    EvalOpts ev;
    auto* e = app.add_subcommand("eval", "Compare the graph model with six baseline regressors on the test split");
    e->add_option("--data-dir", ev.data_dir, "Directory with the three dataset CSVs")->capture_default_str();
    e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint (JSON)")->capture_default_str();
    e->add_option("--seed", ev.seed, "Seed for the node split and the randomized baselines")->capture_default_str();
    e->add_option("--out-dir", ev.out_dir, "Directory for report.csv and predictions.csv")->capture_default_str();
    auto& b = ev.baselines;
    e->add_option("--knn-k", b.knn_k, "Neighbors for KNN")->capture_default_str();
    e->add_option("--tree-max-depth", b.tree_max_depth, "Decision tree depth limit (0 = unlimited)")
        ->capture_default_str();
    e->add_option("--min-samples-leaf", b.min_samples_leaf, "Minimum rows per tree leaf")->capture_default_str();
    e->add_option("--forest-trees", b.forest_trees, "Random forest size")->capture_default_str();
    e->add_option("--forest-max-features", b.forest_max_features, "Features tried per random forest split")
        ->capture_default_str();
    e->add_option("--gb-stages", b.boosting_stages, "Gradient boosting stages")->capture_default_str();
    e->add_option("--gb-lr", b.boosting_learning_rate, "Gradient boosting shrinkage")->capture_default_str();
    e->add_option("--gb-depth", b.boosting_depth, "Gradient boosting tree depth")->capture_default_str();
    e->add_option("--svr-epsilon", b.svr_epsilon, "SVR insensitive-zone half width (PCI points)")
        ->capture_default_str();
    e->add_option("--svr-c", b.svr_c, "SVR penalty C")->capture_default_str();
    e->add_option("--svr-passes", b.svr_passes, "SVR subgradient passes over the data")->capture_default_str();
    e->add_option("--svr-step", b.svr_step, "SVR step size")->capture_default_str();

    SimulateOpts sim;
    auto* s = app.add_subcommand("simulate", "Run a what-if maintenance scenario headlessly");
    s->add_option("--data-dir", sim.data_dir, "Directory with the three dataset CSVs")->capture_default_str();
    s->add_option("--checkpoint", sim.checkpoint, "Model checkpoint (JSON)")->capture_default_str();
    auto* horizon_opt =
        s->add_option("--horizon", sim.horizon, "Months to simulate (overrides the scenario file)")
            ->capture_default_str();
    s->add_option("--scenario", sim.scenario, "Scenario JSON {actions: [{month, kind, segment_ids}], horizon}");
    s->add_option("--out", sim.out, "Trajectory CSV path")->capture_default_str();
    s->add_option("--seed", sim.seed, "Twin seed")->capture_default_str();
    s->add_option("--fork-id", sim.fork_id, "Scenario id; selects the scenario noise stream")->capture_default_str();
    s->add_option("--kappa", sim.kappa, "Spatial coupling toward the neighbor mean, per month")
        ->capture_default_str();
    s->add_option("--noise", sim.noise, "Monthly noise standard deviation (PCI points)")->capture_default_str();
    s->add_option("--alert-threshold", sim.alert_threshold, "Condition alert threshold (PCI points)")
        ->capture_default_str();

    ServeOpts sv;
    auto* v = app.add_subcommand("serve", "Serve the twin over HTTP/JSON");
    v->add_option("--data-dir", sv.data_dir, "Directory with the three dataset CSVs")->capture_default_str();
    v->add_option("--checkpoint", sv.checkpoint, "Model checkpoint (JSON)")->capture_default_str();
    v->add_option("--port", sv.port, "TCP port (PAVETWIN_PORT overrides)")->capture_default_str();
    v->add_option("--host", sv.host, "Bind address")->capture_default_str();
    v->add_option("--state-file", sv.state_file, "Twin state snapshot, rewritten on every change");
    v->add_option("--seed", sv.seed, "Twin, split and baseline seed")->capture_default_str();

    std::string config_file;
    for (auto* sub : {g, t, e, s, v}) {
        sub->add_option("--config", config_file, "Flat key=value file; command-line flags take precedence");
    }

    try {
        auto args = apply_config(app, raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& pe) {
        const int code = app.exit(pe, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return static_cast<int>(ex.exit_code());
    }

    try {
        if (g->parsed()) {
            return cmd_generate(gen, out);
        }
        if (t->parsed()) {
            return cmd_train(tr, out);
        }
        if (e->parsed()) {
            return cmd_eval(ev, out);
        }
        if (s->parsed()) {
            return cmd_simulate(sim, horizon_opt->count() > 0, out);
        }
        if (v->parsed()) {
            return cmd_serve(sv, out);
        }
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return static_cast<int>(ex.exit_code());
    } catch (const std::filesystem::filesystem_error& ex) {
        err << "error: " << ex.what() << '\n';
        return static_cast<int>(ExitCode::Data);
    }
    return static_cast<int>(ExitCode::Usage);
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace pavetwin
