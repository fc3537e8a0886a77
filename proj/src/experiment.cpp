#include "pavetwin/experiment.hpp"

#include "pavetwin/csv.hpp"
#include "pavetwin/errors.hpp"

#include <sstream>

namespace pavetwin {

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= x.rows()) {
            throw IndexError("row " + std::to_string(rows[r]) + " out of range");
        }
        const auto src = x.row(rows[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

std::vector<double> select(std::span<const double> v, std::span<const std::size_t> idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        if (i >= v.size()) {
            throw IndexError("index " + std::to_string(i) + " out of range");
        }
        out.push_back(v[i]);
    }
    return out;
}

ModelComparison compare_models(const PavementGraph& graph, const SageModel& gnn, const NodeSplit& split,
                               const BaselineSpec& defaults) {
    ModelComparison cmp;
    cmp.split = split;
    const auto y_train = select(graph.target, split.train);
    const auto y_test = select(graph.target, split.test);

    auto add = [&](std::string name, std::vector<double> train_pred, std::vector<double> test_pred) {
        cmp.train.push_back(evaluate(name, y_train, train_pred));
        cmp.test.push_back(evaluate(name, y_test, test_pred));
        cmp.outputs.push_back({std::move(name), std::move(train_pred), std::move(test_pred)});
    };

    const auto all = predict(gnn, graph);
    add("GNN", select(all, split.train), select(all, split.test));

    const auto x_train = select_rows(graph.features, split.train);
    const auto x_test = select_rows(graph.features, split.test);
    for (auto kind : kAllBaselines) {
        auto spec = defaults;
        spec.kind = kind;
        auto model = make_baseline(spec);
        model->fit(x_train, y_train);
        add(std::string(display_name(kind)), model->predict(x_train), model->predict(x_test));
    }
    return cmp;
}

std::string scatter_csv(const ModelComparison& cmp, const PavementGraph& graph) {
    std::ostringstream out;
    out << "model,segment_id,actual,predicted\n";
    for (const auto& o : cmp.outputs) {
        for (std::size_t k = 0; k < cmp.split.test.size(); ++k) {
            const auto i = cmp.split.test[k];
            out << o.model << ',' << graph.segment_ids[i] << ',' << csv::format_double(graph.target[i]) << ','
                << csv::format_double(o.test_prediction[k]) << '\n';
        }
    }
    return out.str();
}

}  // namespace pavetwin
