#include "radarsense/random.hpp"

#include <cmath>

namespace radarsense {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::uint64_t stream, std::uint64_t index) const {
    std::array<std::uint32_t, 4> c = {
        static_cast<std::uint32_t>(index),
        static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(stream >> 32),
    };
    std::uint32_t k0 = static_cast<std::uint32_t>(key_);
    std::uint32_t k1 = static_cast<std::uint32_t>(key_ >> 32);
    for (int r = 0; r < 10; ++r) {
        round_once(c, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

std::complex<double> complex_gaussian(const Philox4x32& gen, std::uint64_t stream, std::uint64_t index) {
    const auto r = gen.block(stream, index);
    // u1 in (0, 1], u2 in [0, 1): 64-bit uniforms from two word pairs.
    const std::uint64_t w1 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t w2 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    constexpr double kScale = 1.0 / 18446744073709551616.0;  // 2^-64
    const double u1 = (static_cast<double>(w1) + 1.0) * kScale;
    const double u2 = static_cast<double>(w2) * kScale;
    const double radius = std::sqrt(-std::log(u1));
    const double phase = 6.283185307179586476925286766559 * u2;
    return {radius * std::cos(phase), radius * std::sin(phase)};
}

std::complex<double> qpsk_symbol(const Philox4x32& gen, std::uint64_t stream, std::uint64_t index) {
    const auto r = gen.block(stream, index);
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    const double re = (r[0] & 1u) ? -kInvSqrt2 : kInvSqrt2;
    const double im = (r[0] & 2u) ? -kInvSqrt2 : kInvSqrt2;
    return {re, im};
}

}  // namespace radarsense
