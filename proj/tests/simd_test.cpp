#include "pavetwin/simd.hpp"
#include "pavetwin/rng.hpp"
#include "pavetwin/sage.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <vector>

namespace pavetwin {
namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.normal(0.0, 3.0);
    }
    return v;
}

class Avx2Equivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (simd::avx2_kernels() == nullptr) {
            GTEST_SKIP() << "AVX2/FMA not available on this CPU or build";
        }
    }
    const simd::KernelTable& scalar = simd::scalar_kernels();
    const simd::KernelTable& avx2 = *simd::avx2_kernels();
};

// Lengths around the 4- and 16-wide block boundaries exercise every tail path.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 31, 33, 64, 100, 1001};

TEST_F(Avx2Equivalence, DotWithinRoundingOfScalar) {
    Rng rng(1);
    for (auto n : kLengths) {
        const auto a = random_vector(n, rng);
        const auto b = random_vector(n, rng);
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            abs_sum += std::abs(a[i] * b[i]);
        }
        const double tol = 4.0 * static_cast<double>(n + 1) * std::numeric_limits<double>::epsilon() * abs_sum;
        EXPECT_NEAR(avx2.dot(a.data(), b.data(), n), scalar.dot(a.data(), b.data(), n), tol) << "n=" << n;
    }
}

TEST_F(Avx2Equivalence, AxpyWithinOneFusedRounding) {
    Rng rng(2);
    for (auto n : kLengths) {
        const auto x = random_vector(n, rng);
        const auto y0 = random_vector(n, rng);
        auto ys = y0;
        auto yv = y0;
        scalar.axpy(0.37, x.data(), ys.data(), n);
        avx2.axpy(0.37, x.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = std::abs(y0[i]) + std::abs(0.37 * x[i]);
            EXPECT_NEAR(yv[i], ys[i], 2.0 * std::numeric_limits<double>::epsilon() * scale) << "n=" << n;
        }
    }
}

TEST_F(Avx2Equivalence, ReluBitIdentical) {
    Rng rng(3);
    for (auto n : kLengths) {
        auto in = random_vector(n, rng);
        if (n > 2) {
            in[0] = -0.0;
            in[1] = std::numeric_limits<double>::quiet_NaN();
            in[2] = 0.0;
        }
        std::vector<double> os(n, 9.0);
        std::vector<double> ov(n, 9.0);
        scalar.relu(in.data(), os.data(), n);
        avx2.relu(in.data(), ov.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(os[i]), std::bit_cast<std::uint64_t>(ov[i])) << i;
        }
        const auto grad = random_vector(n, rng);
        scalar.relu_backward(grad.data(), in.data(), os.data(), n);
        avx2.relu_backward(grad.data(), in.data(), ov.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(os[i]), std::bit_cast<std::uint64_t>(ov[i])) << i;
        }
    }
}

TEST_F(Avx2Equivalence, AdamBitIdentical) {
    Rng rng(4);
    simd::AdamCoefficients c{0.001, 0.9, 0.999, 1e-8, 1e-5, 1.0 - 0.9, 1.0 - 0.999};
    for (auto n : kLengths) {
        auto ps = random_vector(n, rng);
        auto ms = random_vector(n, rng);
        auto vs = random_vector(n, rng);
        for (auto& v : vs) {
            v = std::abs(v);
        }
        auto pv = ps;
        auto mv = ms;
        auto vv = vs;
        for (int step = 0; step < 5; ++step) {
            const auto g = random_vector(n, rng);
            scalar.adam(ps.data(), g.data(), ms.data(), vs.data(), n, c);
            avx2.adam(pv.data(), g.data(), mv.data(), vv.data(), n, c);
        }
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(ps[i]), std::bit_cast<std::uint64_t>(pv[i]));
            EXPECT_EQ(std::bit_cast<std::uint64_t>(ms[i]), std::bit_cast<std::uint64_t>(mv[i]));
            EXPECT_EQ(std::bit_cast<std::uint64_t>(vs[i]), std::bit_cast<std::uint64_t>(vv[i]));
        }
    }
}

TEST_F(Avx2Equivalence, ModelForwardAgreesAcrossBackends) {
    const auto graph = testing::random_graph(60, 4, 0.1, 5);
    Rng init(6);
    const auto model = SageModel::initialize(4, 16, init);
    const auto before = simd::active_backend();
    simd::select(simd::Backend::Scalar);
    const auto ps = predict(model, graph);
    simd::select(simd::Backend::Avx2);
    const auto pv = predict(model, graph);
    simd::select(before);
    ASSERT_EQ(ps.size(), pv.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_NEAR(ps[i], pv[i], 1e-10 * (1.0 + std::abs(ps[i])));
    }
}

TEST(SimdDispatch, SelectScalarAlwaysWorks) {
    const auto before = simd::active_backend();
    simd::select(simd::Backend::Scalar);
    EXPECT_EQ(simd::active_backend(), simd::Backend::Scalar);
    EXPECT_EQ(simd::active().name, "scalar");
    simd::select(before);
    EXPECT_EQ(simd::backend_name(simd::Backend::Avx2), "avx2");
}

TEST(SimdDispatch, UnavailableBackendThrows) {
    if (simd::avx2_kernels() != nullptr) {
        GTEST_SKIP() << "AVX2 present";
    }
    EXPECT_ANY_THROW(simd::select(simd::Backend::Avx2));
}

}  // namespace
}  // namespace pavetwin
