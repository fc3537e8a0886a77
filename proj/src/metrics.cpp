#include "pavetwin/metrics.hpp"

#include "pavetwin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pavetwin {

namespace {

void require_pair(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) {
        throw ShapeError("metric inputs differ in length: " + std::to_string(y.size()) + " vs " +
                         std::to_string(y_hat.size()));
    }
    if (y.empty()) {
        throw EmptyInput();
    }
}

double sum_squared_error(std::span<const double> y, std::span<const double> y_hat) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        acc += d * d;
    }
    return acc;
}

std::string fixed4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return buf;
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> y_hat) {
    require_pair(y, y_hat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        acc += std::abs(y[i] - y_hat[i]);
    }
    return acc / static_cast<double>(y.size());
}

double mse_metric(std::span<const double> y, std::span<const double> y_hat) {
    require_pair(y, y_hat);
    return sum_squared_error(y, y_hat) / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) { return std::sqrt(mse_metric(y, y_hat)); }

double r2(std::span<const double> y, std::span<const double> y_hat) {
    require_pair(y, y_hat);
    if (y.size() < 2) {
        throw ZeroVariance();
    }
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0;
    for (double v : y) {
        ss_tot += (v - mean) * (v - mean);
    }
    if (ss_tot == 0.0) {
        throw ZeroVariance();
    }
    return 1.0 - sum_squared_error(y, y_hat) / ss_tot;
}

EvalReport evaluate(std::string model, std::span<const double> y, std::span<const double> y_hat) {
    EvalReport r;
    r.model = std::move(model);
    r.mae = mae(y, y_hat);
    r.mse = mse_metric(y, y_hat);
    r.rmse = std::sqrt(r.mse);
    r.r2 = r2(y, y_hat);
    r.n = y.size();
    return r;
}

std::string report_csv(std::span<const EvalReport> rows) {
    std::string out = "Model,MAE,RMSE,R2\n";
    for (const auto& r : rows) {
        out += r.model + "," + fixed4(r.mae) + "," + fixed4(r.rmse) + "," + fixed4(r.r2) + "\n";
    }
    return out;
}

std::string report_table(std::span<const EvalReport> rows) {
    std::size_t width = 5;
    for (const auto& r : rows) {
        width = std::max(width, r.model.size());
    }
    char line[256];
    std::string out;
    std::snprintf(line, sizeof(line), "%-*s  %10s  %10s  %10s\n", static_cast<int>(width), "Model", "MAE", "RMSE",
                  "R2");
    out += line;
    out += std::string(width + 36, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-*s  %10.4f  %10.4f  %10.4f\n", static_cast<int>(width), r.model.c_str(),
                      r.mae, r.rmse, r.r2);
        out += line;
    }
    return out;
}

}  // namespace pavetwin
