#include "pavetwin/nn.hpp"

#include "pavetwin/errors.hpp"
#include "pavetwin/simd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pavetwin {

DropoutResult dropout(const Matrix& input, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult result{input, std::vector<std::uint8_t>(input.size(), 1)};
    if (!training || rate == 0.0) {
        return result;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    auto out = result.output.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rng.uniform() < rate) {
            result.mask[i] = 0;
            out[i] = 0.0;
        } else {
            out[i] *= keep_scale;
        }
    }
    return result;
}

Matrix dropout_backward(const Matrix& grad, std::span<const std::uint8_t> mask, double rate) {
    if (mask.size() != grad.size()) {
        throw ShapeError("dropout_backward: mask length mismatch");
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix out = grad;
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = mask[i] != 0 ? v[i] * keep_scale : 0.0;
    }
    return out;
}

double mse(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size() || prediction.empty()) {
        throw ShapeError("mse: lengths " + std::to_string(prediction.size()) + " and " +
                         std::to_string(target.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(prediction.size());
}

std::vector<double> mse_grad(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size() || prediction.empty()) {
        throw ShapeError("mse_grad: lengths " + std::to_string(prediction.size()) + " and " +
                         std::to_string(target.size()));
    }
    const double scale = 2.0 / static_cast<double>(prediction.size());
    std::vector<double> g(prediction.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = scale * (prediction[i] - target[i]);
    }
    return g;
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state, const AdamConfig& cfg) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols() || state.m.size() != param.size() ||
        state.v.size() != param.size()) {
        throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
    }
    const std::int64_t t = state.step + 1;
    const simd::AdamCoefficients c{
        cfg.lr,
        cfg.beta1,
        cfg.beta2,
        cfg.eps,
        cfg.weight_decay,
        1.0 - std::pow(cfg.beta1, static_cast<double>(t)),
        1.0 - std::pow(cfg.beta2, static_cast<double>(t)),
    };
    Matrix next = param;
    Matrix m = state.m;
    Matrix v = state.v;
    simd::active().adam(next.values().data(), grad.values().data(), m.values().data(), v.values().data(),
                        next.size(), c);
    if (!next.all_finite() || !m.all_finite() || !v.all_finite()) {
        throw NonFinite("adam_step produced a non-finite value at step " + std::to_string(t));
    }
    param = std::move(next);
    state.m = std::move(m);
    state.v = std::move(v);
    state.step = t;
}

GradCheckResult grad_check(const LossWithGradient& loss, std::span<const double> params,
                           std::size_t n_probes, Rng& rng, double h) {
    GradCheckResult result;
    if (params.empty() || n_probes == 0) {
        return result;
    }
    std::vector<double> analytic(params.size());
    loss(params, &analytic);

    std::vector<double> probe(params.begin(), params.end());
    for (std::size_t k = 0; k < n_probes; ++k) {
        const std::size_t idx = static_cast<std::size_t>(rng.below(params.size()));
        const double original = probe[idx];
        probe[idx] = original + h;
        const double up = loss(probe, nullptr);
        probe[idx] = original - h;
        const double down = loss(probe, nullptr);
        probe[idx] = original;

        const double numeric = (up - down) / (2.0 * h);
        const double err = std::abs(analytic[idx] - numeric) /
                           std::max(1.0, std::abs(analytic[idx]) + std::abs(numeric));
        if (k == 0 || err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst_index = idx;
        }
        ++result.probes;
    }
    return result;
}

}  // namespace pavetwin
