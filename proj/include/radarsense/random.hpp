#ifndef RADARSENSE_RANDOM_HPP
#define RADARSENSE_RANDOM_HPP

#include <array>
#include <complex>
#include <cstdint>

namespace radarsense {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC'11). Stateless: every 128-bit counter and
/// 64-bit key pair maps to four independent 32-bit words, so any draw can be
/// produced out of order and results are identical across platforms.
///
/// Draw layout used by this project, with the trial seed as key:
///   stream 0: QPSK data symbols, index = tx_antenna * n_data_bins + bin
///   stream 1: receiver noise, antenna-major sample-minor,
///             index = rx_antenna * n_samples + sample
/// One counter block yields one complex sample (Box-Muller for noise, two
/// bits for a QPSK symbol).
class Philox4x32 {
  public:
    explicit Philox4x32(std::uint64_t key) : key_(key) {}

    std::array<std::uint32_t, 4> block(std::uint64_t stream, std::uint64_t index) const;

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
};

/// Unit-variance circularly symmetric complex Gaussian draw at (stream, index):
/// Box-Muller on two 64-bit uniforms from one Philox block.
std::complex<double> complex_gaussian(const Philox4x32& gen, std::uint64_t stream, std::uint64_t index);

/// Unit-modulus QPSK symbol (+-1 +-j)/sqrt(2) at (stream, index).
std::complex<double> qpsk_symbol(const Philox4x32& gen, std::uint64_t stream, std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t kData = 0;
inline constexpr std::uint64_t kNoise = 1;
}  // namespace streams

}  // namespace radarsense

#endif  // RADARSENSE_RANDOM_HPP
