#include "kernels_internal.hpp"

#include <cmath>

namespace pavetwin::simd::detail {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void relu(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] > 0.0 ? in[i] : 0.0;
    }
}

void relu_backward(const double* grad, const double* pre, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = pre[i] > 0.0 ? grad[i] : 0.0;
    }
}

void adam(double* param, const double* grad, double* m, double* v, std::size_t n,
          const AdamCoefficients& c) {
    const double one_minus_b1 = 1.0 - c.beta1;
    const double one_minus_b2 = 1.0 - c.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] + c.weight_decay * param[i];
        m[i] = c.beta1 * m[i] + one_minus_b1 * g;
        v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
        const double m_hat = m[i] / c.bias_correction1;
        const double v_hat = v[i] / c.bias_correction2;
        param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

}  // namespace

const KernelTable kScalarTable{"scalar", dot, axpy, relu, relu_backward, adam};

}  // namespace pavetwin::simd::detail
