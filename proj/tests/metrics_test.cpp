#include "pavetwin/errors.hpp"
#include "pavetwin/metrics.hpp"
#include "pavetwin/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace pavetwin {
namespace {

TEST(Metrics, HandValues) {
    const std::vector<double> y{0, 0};
    const std::vector<double> p{3, -1};
    EXPECT_DOUBLE_EQ(mae(y, p), 2.0);
    EXPECT_DOUBLE_EQ(mse_metric(y, p), 5.0);
    EXPECT_DOUBLE_EQ(rmse(y, p), std::sqrt(5.0));
}

TEST(Metrics, R2Cases) {
    const std::vector<double> y{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(r2(y, y), 1.0);
    const std::vector<double> mean(4, 2.5);
    EXPECT_DOUBLE_EQ(r2(y, mean), 0.0);
    const std::vector<double> bad{4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(r2(y, bad), 1.0 - 20.0 / 5.0);
}

TEST(Metrics, MatchesTwoPassOracle) {
    Rng rng(2);
    std::vector<double> y(500), p(500);
    for (std::size_t i = 0; i < 500; ++i) {
        y[i] = rng.uniform(0, 100);
        p[i] = y[i] + rng.normal(0, 5);
    }
    long double abs_sum = 0, sq = 0, mean = 0, tot = 0;
    for (std::size_t i = 0; i < 500; ++i) {
        abs_sum += std::fabs(y[i] - p[i]);
        sq += (long double)(y[i] - p[i]) * (y[i] - p[i]);
        mean += y[i];
    }
    mean /= 500;
    for (double v : y) {
        tot += (v - mean) * (v - mean);
    }
    EXPECT_NEAR(mae(y, p), static_cast<double>(abs_sum / 500), 1e-10);
    EXPECT_NEAR(rmse(y, p), std::sqrt(static_cast<double>(sq / 500)), 1e-10);
    EXPECT_NEAR(r2(y, p), static_cast<double>(1 - sq / tot), 1e-10);
}

TEST(Metrics, Errors) {
    const std::vector<double> a{1, 2};
    const std::vector<double> b{1};
    const std::vector<double> none;
    EXPECT_THROW(mae(a, b), ShapeError);
    EXPECT_THROW(rmse(none, none), EmptyInput);
    const std::vector<double> flat{3, 3, 3};
    EXPECT_THROW(r2(flat, flat), ZeroVariance);
    EXPECT_THROW(r2(b, b), ZeroVariance);
}

TEST(Report, CsvAndTable) {
    const std::vector<double> y{0, 10};
    const std::vector<double> p{1, 9};
    const std::vector<EvalReport> rows{evaluate("GNN", y, p), evaluate("Linear Regression", y, y)};
    EXPECT_EQ(rows[0].n, 2u);
    EXPECT_EQ(report_csv(rows), "Model,MAE,RMSE,R2\nGNN,1.0000,1.0000,0.9600\nLinear Regression,0.0000,0.0000,1.0000\n");
    const auto table = report_table(rows);
    EXPECT_NE(table.find("Linear Regression"), std::string::npos);
    EXPECT_NE(table.find("0.9600"), std::string::npos);
}

}  // namespace
}  // namespace pavetwin
