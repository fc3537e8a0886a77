#include "pavetwin/rng.hpp"

#include <cmath>
#include <numbers>

namespace pavetwin {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : s_) {
        word = splitmix64(sm);
    }
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t sm = seed ^ 0x6A09E667F3BCC909ULL;
    std::uint64_t a = splitmix64(sm);
    std::uint64_t mix = index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL;
    std::uint64_t b = splitmix64(mix);
    return Rng(a ^ rotl(b, 17));
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next_u64();
    while (x >= limit) {
        x = next_u64();
    }
    return x % n;
}

double Rng::normal() noexcept {
    // u1 in (0, 1] keeps log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pavetwin
