#pragma once

#include "pavetwin/matrix.hpp"
#include "pavetwin/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pavetwin {

// --- dropout -----------------------------------------------------------------

struct DropoutResult {
    Matrix output;
    // 1 = kept, 0 = dropped; same length as the input values.
    std::vector<std::uint8_t> mask;
};

/// Inverted dropout. In training mode each entry is dropped with probability
/// `rate` and survivors are scaled by 1/(1-rate); otherwise the input passes
/// through unchanged with an all-keep mask. Throws ConfigError unless 0 <= rate < 1.
DropoutResult dropout(const Matrix& input, double rate, bool training, Rng& rng);

/// Gradient through a dropout mask produced by `dropout`.
Matrix dropout_backward(const Matrix& grad, std::span<const std::uint8_t> mask, double rate);

// --- loss --------------------------------------------------------------------

double mse(std::span<const double> prediction, std::span<const double> target);
std::vector<double> mse_grad(std::span<const double> prediction, std::span<const double> target);

// --- optimizer ---------------------------------------------------------------

struct AdamConfig {
    double lr = 0.001;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Matrix m;
    Matrix v;
    std::int64_t step = 0;

    static AdamState for_param(const Matrix& param) {
        return {Matrix(param.rows(), param.cols()), Matrix(param.rows(), param.cols()), 0};
    }
};

/// Adam with coupled L2: the decay term is folded into the gradient before the
/// moment updates. Updates `param` in place. Throws ShapeError, or NonFinite
/// if the step produces NaN/Inf (the parameter is left untouched in that case).
void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& cfg);

// --- gradient checking ---------------------------------------------------------

/// Loss evaluated at a flat parameter vector. When `grad` is non-null it must
/// be filled with the analytic gradient (same length as params).
using LossWithGradient = std::function<double(std::span<const double> params, std::vector<double>* grad)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t probes = 0;
};

/// Central differences (step h) on `n_probes` random coordinates, compared to
/// the analytic gradient with |ga - gn| / max(1, |ga| + |gn|).
GradCheckResult grad_check(const LossWithGradient& loss, std::span<const double> params,
                           std::size_t n_probes, Rng& rng, double h = 1e-5);

}  // namespace pavetwin
