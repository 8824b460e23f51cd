#include "radarsense/waveform.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radarsense/dft.hpp"
#include "radarsense/random.hpp"

namespace radarsense {

Eigen::MatrixXcd build_pilots(const RadarConfig& cfg) {
    const int np = cfg.n_pilot_subcarriers;
    const int mt = cfg.n_tx_antennas;
    if (np < mt)
        throw std::invalid_argument("orthogonal pilots need n_pilot_subcarriers >= n_tx_antennas");
    // DFT columns at maximally separated frequencies k_m = m * floor(N_P/M_T).
    // Consecutive frequencies would alias against the per-sample delay slopes
    // of the cluster dictionary (m/N_P ~ delta_l/N), leaving distinct clusters
    // nearly indistinguishable; spreading removes those coincidences while
    // keeping the columns exactly orthogonal and unit modulus.
    const int stride = np / mt;
    Eigen::MatrixXcd s(np, mt);
    for (int m = 0; m < mt; ++m) {
        const long long freq = static_cast<long long>(m) * stride;
        for (int n = 0; n < np; ++n) {
            const double cycles = std::fmod(static_cast<double>(n) * freq, static_cast<double>(np));
            s(n, m) = std::polar(1.0, -kTwoPi * cycles / np);
        }
    }
    return s;
}

Eigen::MatrixXcd build_tx_frequency_frame(const Eigen::MatrixXcd& pilots, const RadarConfig& cfg,
                                          std::uint64_t seed) {
    const int n = cfg.n_subcarriers;
    const int np = cfg.n_pilot_subcarriers;
    const int mt = cfg.n_tx_antennas;
    if (pilots.rows() != np || pilots.cols() != mt)
        throw std::invalid_argument("pilot matrix shape does not match the config");
    Eigen::MatrixXcd frame(n, mt);
    frame.topRows(np) = pilots;
    const Philox4x32 gen(seed);
    const std::uint64_t n_data = static_cast<std::uint64_t>(n - np);
    for (int m = 0; m < mt; ++m) {
        for (int b = 0; b + np < n; ++b) {
            frame(np + b, m) = qpsk_symbol(gen, streams::kData, m * n_data + b);
        }
    }
    return frame;
}

TimeSignal ofdm_modulate(const Eigen::VectorXcd& freq_samples, const RadarConfig& cfg) {
    const int n = cfg.n_subcarriers;
    const int q = cfg.cp_length;
    if (freq_samples.size() != n)
        throw std::invalid_argument("frequency frame must have one sample per subcarrier");
    const Eigen::VectorXcd data = std::sqrt(cfg.tx_power_w) * unitary_idft(freq_samples);
    TimeSignal out(q + n);
    out.head(q) = data.tail(q);
    out.tail(n) = data;
    return out;
}

std::vector<TimeSignal> modulate_frame(const Eigen::MatrixXcd& freq_frame, const RadarConfig& cfg) {
    std::vector<TimeSignal> tx;
    tx.reserve(freq_frame.cols());
    for (Eigen::Index m = 0; m < freq_frame.cols(); ++m) tx.push_back(ofdm_modulate(freq_frame.col(m), cfg));
    return tx;
}

std::vector<TimeSignal> simulate_receive(const std::vector<TimeSignal>& tx, const ChannelTensor& h,
                                         const RadarConfig& cfg, std::optional<std::uint64_t> noise_seed) {
    const int n = cfg.n_subcarriers;
    const int q = cfg.cp_length;
    const int l_max = cfg.max_delay_samples();
    if (static_cast<int>(tx.size()) != cfg.n_tx_antennas)
        throw std::invalid_argument("need one transmit signal per transmit antenna");
    for (const auto& x : tx)
        if (x.size() != q + n) throw std::invalid_argument("transmit signals must carry the cyclic prefix");
    if (h.l_max != l_max || h.n_rx != cfg.n_rx_antennas || h.n_tx != cfg.n_tx_antennas)
        throw std::invalid_argument("channel tensor shape does not match the config");
    if (q < l_max)
        throw std::invalid_argument("cyclic prefix shorter than the channel memory, "
                                    "inter-symbol contamination would occur");

    const double sigma = std::sqrt(cfg.noise_variance_w());
    std::vector<TimeSignal> rx;
    rx.reserve(cfg.n_rx_antennas);
    for (int r = 0; r < cfg.n_rx_antennas; ++r) {
        TimeSignal y = TimeSignal::Zero(n);
        for (int m = 0; m < cfg.n_tx_antennas; ++m) {
            const TimeSignal& x = tx[m];
            for (int l = 1; l <= l_max; ++l) {
                const Complex tap = h.at(l, r, m);
                if (tap == Complex(0.0, 0.0)) continue;
                // Sample t of the data window sees the transmit sample
                // delayed by l - 1, reaching into the prefix for small t.
                y += tap * x.segment(q - (l - 1), n);
            }
        }
        if (noise_seed) {
            const Philox4x32 gen(*noise_seed);
            const std::uint64_t base = static_cast<std::uint64_t>(r) * n;
            for (int t = 0; t < n; ++t) y[t] += sigma * complex_gaussian(gen, streams::kNoise, base + t);
        }
        rx.push_back(std::move(y));
    }
    return rx;
}

Eigen::VectorXcd demodulate_pilots(const std::vector<TimeSignal>& rx, const RadarConfig& cfg) {
    const int n = cfg.n_subcarriers;
    const int np = cfg.n_pilot_subcarriers;
    if (static_cast<int>(rx.size()) != cfg.n_rx_antennas)
        throw std::invalid_argument("need one receive signal per receive antenna");
    Eigen::VectorXcd y(static_cast<Eigen::Index>(np) * cfg.n_rx_antennas);
    for (int r = 0; r < cfg.n_rx_antennas; ++r) {
        if (rx[r].size() != n)
            throw std::invalid_argument("receive signals must be prefix-stripped, length N");
        y.segment(static_cast<Eigen::Index>(r) * np, np) = unitary_dft(rx[r]).head(np);
    }
    return y;
}

Eigen::MatrixXcd build_measurement_matrix(const Eigen::MatrixXcd& pilots, const RadarConfig& cfg) {
    const int n = cfg.n_subcarriers;
    const int np = cfg.n_pilot_subcarriers;
    const int mt = cfg.n_tx_antennas;
    const int mr = cfg.n_rx_antennas;
    const int l_max = cfg.max_delay_samples();
    if (pilots.rows() != np || pilots.cols() != mt)
        throw std::invalid_argument("pilot matrix shape does not match the config");

    Eigen::MatrixXcd theta = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(np) * mr,
                                                    static_cast<Eigen::Index>(l_max) * mt * mr);
    Eigen::VectorXcd delay_phases(np);
    for (int l = 1; l <= l_max; ++l) {
        for (int row = 0; row < np; ++row) {
            const double cycles = std::fmod(static_cast<double>(row) * (l - 1), static_cast<double>(n));
            delay_phases[row] = std::polar(1.0, -kTwoPi * cycles / n);
        }
        for (int r = 0; r < mr; ++r) {
            for (int m = 0; m < mt; ++m) {
                const Eigen::Index col = (static_cast<Eigen::Index>(l - 1) * mr + r) * mt + m;
                theta.block(static_cast<Eigen::Index>(r) * np, col, np, 1) =
                    pilots.col(m).cwiseProduct(delay_phases);
            }
        }
    }
    return theta;
}

void dump_signals(const std::vector<TimeSignal>& signals, const std::string& path,
                  std::optional<std::uint64_t> seed) {
    if (signals.empty()) throw std::invalid_argument("nothing to dump");
    const Eigen::Index samples = signals.front().size();
    for (const auto& s : signals)
        if (s.size() != samples) throw std::invalid_argument("signal lengths differ");

    std::ofstream bin(path, std::ios::binary | std::ios::trunc);
    if (!bin) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& s : signals) {
        for (Eigen::Index t = 0; t < samples; ++t) {
            const double pair[2] = {s[t].real(), s[t].imag()};
            bin.write(reinterpret_cast<const char*>(pair), sizeof pair);
        }
    }
    if (!bin) throw std::runtime_error("short write to " + path);
    bin.close();

    nlohmann::json sidecar = {
        {"schema_version", 1},
        {"dtype", "complex128-interleaved-le"},
        {"antennas", signals.size()},
        {"samples", samples},
        {"seed", nullptr},
    };
    if (seed) sidecar["seed"] = *seed;
    std::ofstream meta(path + ".json", std::ios::trunc);
    if (!meta) throw std::runtime_error("cannot open " + path + ".json for writing");
    meta << sidecar.dump(2) << "\n";
}

}  // namespace radarsense
