#include "pavetwin/errors.hpp"
#include "pavetwin/sage.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace pavetwin {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "pavetwin.sage";

json matrix_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j, std::size_t rows, std::size_t cols, const char* what) {
    const auto r = j.at("rows").get<std::size_t>();
    const auto c = j.at("cols").get<std::size_t>();
    if (r != rows || c != cols) {
        throw SchemaVersionError(std::string(what) + " is " + std::to_string(r) + "x" + std::to_string(c) +
                                 ", declared dimensions require " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
    }
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != r * c) {
        throw CorruptCheckpoint(std::string(what) + " data length does not match its shape");
    }
    return Matrix(r, c, std::move(data));
}

json layer_json(const SageLayer& layer) {
    return {{"self_weight", matrix_json(layer.self_weight)},
            {"neighbor_weight", matrix_json(layer.neighbor_weight)},
            {"bias", matrix_json(layer.bias)}};
}

SageLayer layer_from(const json& j, std::size_t d_in, std::size_t d_out) {
    return {matrix_from(j.at("self_weight"), d_out, d_in, "self_weight"),
            matrix_from(j.at("neighbor_weight"), d_out, d_in, "neighbor_weight"),
            matrix_from(j.at("bias"), 1, d_out, "bias")};
}

}  // namespace

std::string checkpoint_json(const SageModel& model) {
    const auto& cfg = model.config;
    json j;
    j["format"] = kFormat;
    j["version"] = kCheckpointVersion;
    j["input_dim"] = model.input_dim();
    j["hidden_dim"] = model.hidden_dim();
    j["layers"] = json::array({layer_json(model.layer1), layer_json(model.layer2)});
    j["head"] = {{"weight", matrix_json(model.head_weight)}, {"bias", matrix_json(model.head_bias)}};
    j["scaler"] = {{"mean", model.scaler.means()}, {"sd", model.scaler.sds()}};
    j["encoder"] = {{"categories", model.encoder.categories()}};
    j["train_config"] = {{"lr", cfg.lr},
                         {"weight_decay", cfg.weight_decay},
                         {"dropout", cfg.dropout},
                         {"epochs", cfg.epochs},
                         {"hidden_dim", cfg.hidden_dim},
                         {"seed", cfg.seed},
                         {"weighted_aggregation", cfg.weighted_aggregation}};
    j["seed"] = cfg.seed;
    return j.dump(1);
}

SageModel model_from_checkpoint_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormat) {
            throw CorruptCheckpoint("not a pavetwin model checkpoint");
        }
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw SchemaVersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                     std::to_string(kCheckpointVersion) + ")");
        }
        const auto input_dim = j.at("input_dim").get<std::size_t>();
        const auto hidden_dim = j.at("hidden_dim").get<std::size_t>();
        if (input_dim == 0 || hidden_dim == 0) {
            throw SchemaVersionError("checkpoint declares a zero dimension");
        }
        const auto& layers = j.at("layers");
        if (!layers.is_array() || layers.size() != 2) {
            throw SchemaVersionError("checkpoint must hold exactly two layers");
        }

        SageModel m;
        m.layer1 = layer_from(layers[0], input_dim, hidden_dim);
        m.layer2 = layer_from(layers[1], hidden_dim, hidden_dim);
        m.head_weight = matrix_from(j.at("head").at("weight"), 1, hidden_dim, "head weight");
        m.head_bias = matrix_from(j.at("head").at("bias"), 1, 1, "head bias");

        auto means = j.at("scaler").at("mean").get<std::vector<double>>();
        auto sds = j.at("scaler").at("sd").get<std::vector<double>>();
        if (means.size() != input_dim) {
            throw SchemaVersionError("scaler width does not match input_dim");
        }
        m.scaler = FeatureScaler::from_moments(std::move(means), std::move(sds));
        m.encoder = LabelEncoder::from_categories(j.at("encoder").at("categories").get<std::vector<std::string>>());

        const auto& tc = j.at("train_config");
        m.config.lr = tc.at("lr").get<double>();
        m.config.weight_decay = tc.at("weight_decay").get<double>();
        m.config.dropout = tc.at("dropout").get<double>();
        m.config.epochs = tc.at("epochs").get<std::size_t>();
        m.config.hidden_dim = tc.at("hidden_dim").get<std::size_t>();
        m.config.seed = tc.at("seed").get<std::uint64_t>();
        m.config.weighted_aggregation = tc.value("weighted_aggregation", false);
        if (m.config.hidden_dim != hidden_dim) {
            throw SchemaVersionError("train_config.hidden_dim disagrees with hidden_dim");
        }
        return m;
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("checkpoint is missing or mistypes a field: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptCheckpoint(std::string("checkpoint holds invalid values: ") + e.what());
    }
}

void save_checkpoint(const SageModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write checkpoint " + path.string());
    }
    out << checkpoint_json(model) << '\n';
}

SageModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_checkpoint_json(ss.str());
}

}  // namespace pavetwin
