#pragma once

#include <array>
#include <cstdint>

namespace pavetwin {

// SplitMix64 step. Used to expand seeds; also a decent standalone mixer.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Portable xoshiro256** generator seeded through SplitMix64.
///
/// Every derived quantity (uniform doubles, bounded integers, normals) is
/// produced by a fixed algorithm so that a seed reproduces the same stream on
/// any platform. Independent sub-streams are obtained with `Rng::stream`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    /// Stream `index` of `seed`; streams of distinct indices do not overlap in practice.
    static Rng stream(std::uint64_t seed, std::uint64_t index) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0. Rejection-sampled, unbiased.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Standard normal via Box-Muller (cosine branch only; no cached pair).
    double normal() noexcept;
    double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

    const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) noexcept { s_ = s; }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace pavetwin
