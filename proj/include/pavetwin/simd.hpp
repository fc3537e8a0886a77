#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the dense kernel.
//
// Each backend provides the same table of functions. The scalar table is the
// reference implementation; vector tables must agree with it (bit-for-bit for
// elementwise kernels, to rounding for reductions). The active table is picked
// once at startup from CPU features, overridable with PAVETWIN_SIMD=scalar|avx2.

namespace pavetwin::simd {

struct AdamCoefficients {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double weight_decay;
    double bias_correction1;  // 1 - beta1^t
    double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
    std::string_view name;
    // sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = max(in, 0)
    void (*relu)(const double* in, double* out, std::size_t n);
    // out = pre > 0 ? grad : 0
    void (*relu_backward)(const double* grad, const double* pre, double* out, std::size_t n);
    // One coupled-L2 Adam update over n parameters.
    void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoefficients& c);
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_kernels() noexcept;

/// nullptr when not compiled in or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels() noexcept;

const KernelTable& active() noexcept;
Backend active_backend() noexcept;

/// Force a backend. Throws ConfigError if it is unavailable.
void select(Backend backend);

std::string_view backend_name(Backend backend) noexcept;

}  // namespace pavetwin::simd
