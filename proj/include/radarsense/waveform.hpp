#ifndef RADARSENSE_WAVEFORM_HPP
#define RADARSENSE_WAVEFORM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "radarsense/channel.hpp"
#include "radarsense/config.hpp"
#include "radarsense/types.hpp"

namespace radarsense {

/// Complex baseband samples of one antenna. Transmit signals carry the Q
/// cyclic-prefix samples followed by the N data samples; receive signals are
/// the N post-prefix samples.
using TimeSignal = Eigen::VectorXcd;

/// DFT pilot matrix, N_P rows by M_T columns, entry (n, m) =
/// exp(-j 2 pi n m / N_P). Columns are mutually orthogonal whenever
/// N_P >= M_T, which validate_config enforces. Throws std::invalid_argument
/// otherwise.
Eigen::MatrixXcd build_pilots(const RadarConfig& cfg);

/// Frequency-domain samples of every transmit antenna (N x M_T): the pilot
/// columns on the first N_P bins and seeded unit-modulus QPSK data on the
/// rest. The data bins are transmitted but never read by the estimator.
Eigen::MatrixXcd build_tx_frequency_frame(const Eigen::MatrixXcd& pilots, const RadarConfig& cfg,
                                          std::uint64_t seed);

/// One OFDM symbol for one antenna: sqrt(p) times the unitary inverse DFT of
/// the N frequency samples, with the last Q samples copied in front as the
/// cyclic prefix. Output length Q + N.
TimeSignal ofdm_modulate(const Eigen::VectorXcd& freq_samples, const RadarConfig& cfg);

/// All transmit antennas of one frame, modulated.
std::vector<TimeSignal> modulate_frame(const Eigen::MatrixXcd& freq_frame, const RadarConfig& cfg);

/// Time-domain receive simulation: convolves the cyclic-prefixed transmit
/// signals with the cluster channel taps and evaluates the N post-prefix
/// sample indices, then adds circularly symmetric Gaussian noise of per-sample
/// variance noise_psd * N * delta_f. noise_seed == nullopt means noiseless.
/// Noise draws follow the documented Philox layout (antenna-major,
/// sample-minor) so trials are reproducible. Throws std::invalid_argument when
/// the cyclic prefix is shorter than the channel memory.
std::vector<TimeSignal> simulate_receive(const std::vector<TimeSignal>& tx, const ChannelTensor& h,
                                         const RadarConfig& cfg, std::optional<std::uint64_t> noise_seed);

/// Per-antenna unitary DFT of the received samples, keeping the first N_P
/// pilot bins and stacking them receive-antenna-major: length N_P * M_R.
Eigen::VectorXcd demodulate_pilots(const std::vector<TimeSignal>& rx, const RadarConfig& cfg);

/// The pilot measurement matrix: (N_P * M_R) x (L_max * M_T * M_R), columns
/// ordered exactly like ChannelTensor::stacked (cluster-major, then receive
/// antenna, then transmit antenna). Column (l, rx, tx) is nonzero only in
/// receive block rx, where row n holds s(n, tx) * exp(-j 2 pi n (l-1) / N).
/// The noiseless pilot measurement equals sqrt(p) * matrix * stacked channel.
Eigen::MatrixXcd build_measurement_matrix(const Eigen::MatrixXcd& pilots, const RadarConfig& cfg);

/// Raw dump of per-antenna complex samples: interleaved little-endian float64
/// (re, im) pairs, row-major [antenna][sample], plus a JSON sidecar at
/// path + ".json" describing the shape and seed.
void dump_signals(const std::vector<TimeSignal>& signals, const std::string& path,
                  std::optional<std::uint64_t> seed);

}  // namespace radarsense

#endif  // RADARSENSE_WAVEFORM_HPP
