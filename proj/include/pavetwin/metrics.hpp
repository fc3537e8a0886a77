#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pavetwin {

// Regression metrics. y is the observed target, y_hat the prediction.
// Length mismatch throws ShapeError; empty input throws EmptyInput.

double mae(std::span<const double> y, std::span<const double> y_hat);
double mse_metric(std::span<const double> y, std::span<const double> y_hat);
double rmse(std::span<const double> y, std::span<const double> y_hat);
/// 1 - SS_res / SS_tot. Needs n >= 2; throws ZeroVariance when all y are equal.
double r2(std::span<const double> y, std::span<const double> y_hat);

struct EvalReport {
    std::string model;
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double mse = 0.0;
    std::size_t n = 0;
};

EvalReport evaluate(std::string model, std::span<const double> y, std::span<const double> y_hat);

/// "Model,MAE,RMSE,R2" with 4 decimals.
std::string report_csv(std::span<const EvalReport> rows);
/// Aligned text table in the same column order.
std::string report_table(std::span<const EvalReport> rows);

}  // namespace pavetwin
