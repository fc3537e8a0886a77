#include "kernels_internal.hpp"

#include "pavetwin/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace pavetwin::simd {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(PAVETWIN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() noexcept {
    const KernelTable* best = avx2_kernels();
    if (const char* env = std::getenv("PAVETWIN_SIMD")) {
        const std::string want(env);
        if (want == "scalar") {
            return &scalar_kernels();
        }
        if (want == "avx2" && best != nullptr) {
            return best;
        }
    }
    return best != nullptr ? best : &scalar_kernels();
}

std::atomic<const KernelTable*>& table_slot() noexcept {
    static std::atomic<const KernelTable*> slot{initial_table()};
    return slot;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_kernels() noexcept {
#if defined(PAVETWIN_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &detail::kAvx2Table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *table_slot().load(std::memory_order_acquire); }

Backend active_backend() noexcept {
    return &active() == &scalar_kernels() ? Backend::Scalar : Backend::Avx2;
}

void select(Backend backend) {
    const KernelTable* table = nullptr;
    switch (backend) {
        case Backend::Scalar: table = &scalar_kernels(); break;
        case Backend::Avx2: table = avx2_kernels(); break;
    }
    if (table == nullptr) {
        throw ConfigError("SIMD backend '" + std::string(backend_name(backend)) + "' is not available");
    }
    table_slot().store(table, std::memory_order_release);
}

std::string_view backend_name(Backend backend) noexcept {
    return backend == Backend::Scalar ? "scalar" : "avx2";
}

}  // namespace pavetwin::simd
