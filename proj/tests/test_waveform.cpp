#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "radarsense/dft.hpp"
#include "radarsense/random.hpp"
#include "radarsense/waveform.hpp"
#include "test_support.hpp"

using namespace radarsense;
using radarsense::testing::random_targets;
using radarsense::testing::reference_config;
using radarsense::testing::small_config;

TEST_CASE("philox reference blocks") {
    // Known-answer vectors of philox4x32-10.
    const Philox4x32 zero(0);
    CHECK(zero.block(0, 0) == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    const Philox4x32 ones(0xFFFFFFFFFFFFFFFFull);
    CHECK(ones.block(0xFFFFFFFFFFFFFFFFull, 0xFFFFFFFFFFFFFFFFull) ==
          std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    const Philox4x32 pi_key(0x299f31d0a4093822ull);
    CHECK(pi_key.block(0x0370734413198a2eull, 0x85a308d3243f6a88ull) ==
          std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("pilot matrix structure") {
    RadarConfig cfg = reference_config();
    const Eigen::MatrixXcd pilots = build_pilots(cfg);
    REQUIRE(pilots.rows() == 300);
    REQUIRE(pilots.cols() == 4);
    const Eigen::MatrixXcd gram = pilots.adjoint() * pilots;
    CHECK((gram - 300.0 * Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12 * 300.0);
    CHECK((pilots.cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-14);

    cfg.n_tx_antennas = 1;
    cfg.n_rx_antennas = 1;
    const Eigen::MatrixXcd single = build_pilots(cfg);
    CHECK((single.array() - 1.0).abs().maxCoeff() <= 1e-14);

    cfg.n_tx_antennas = 2;
    cfg.n_pilot_subcarriers = 4;
    const Eigen::MatrixXcd tiny = build_pilots(cfg);
    CHECK(std::abs(tiny.col(0).dot(tiny.col(1))) <= 1e-13);  // fourth roots of unity sum to zero

    cfg.n_pilot_subcarriers = 1;
    CHECK_THROWS_AS(build_pilots(cfg), std::invalid_argument);
}

TEST_CASE("ofdm modulation") {
    const RadarConfig cfg = small_config(64, 16, 1, 1, 4);
    const double amp = std::sqrt(cfg.tx_power_w);

    SUBCASE("the first subcarrier maps to a constant sequence") {
        Eigen::VectorXcd s = Eigen::VectorXcd::Zero(64);
        s[0] = 1.0;
        const TimeSignal x = ofdm_modulate(s, cfg);
        REQUIRE(x.size() == 64 + cfg.cp_length);
        for (Eigen::Index t = 0; t < x.size(); ++t)
            CHECK(std::abs(x[t]) == doctest::Approx(amp / 8.0).epsilon(1e-12));
    }

    SUBCASE("prefix copies the tail and demodulation inverts") {
        std::mt19937 rng(5);
        for (int trial = 0; trial < 1000; ++trial) {
            Eigen::VectorXcd s(64);
            radarsense::testing::fill_random_gaussian(s, rng);
            const TimeSignal x = ofdm_modulate(s, cfg);
            CHECK((x.head(cfg.cp_length) - x.tail(cfg.cp_length)).norm() == 0.0);
            const Eigen::VectorXcd back = unitary_dft(x.tail(64)) / amp;
            CHECK((back - s).norm() <= 1e-12 * s.norm());
        }
    }

    SUBCASE("wrong input length is a shape error") {
        CHECK_THROWS_AS(ofdm_modulate(Eigen::VectorXcd::Zero(63), cfg), std::invalid_argument);
    }
}

TEST_CASE("dft unitarity preserves energy") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 8 << (trial % 5);
        Eigen::VectorXcd v(n);
        radarsense::testing::fill_random_gaussian(v, rng);
        const Eigen::VectorXcd fwd = unitary_dft(v);
        CHECK(fwd.norm() == doctest::Approx(v.norm()).epsilon(1e-12));
        CHECK((unitary_idft(fwd) - v).norm() <= 1e-12 * v.norm());
    }
}

TEST_CASE("receive simulation") {
    const RadarConfig cfg = small_config(64, 16, 1, 1, 4);

    SUBCASE("zero channel gives zero output") {
        const ChannelTensor h(cfg.max_delay_samples(), 1, 1);
        Eigen::VectorXcd s = Eigen::VectorXcd::Ones(64);
        const auto rx = simulate_receive({ofdm_modulate(s, cfg)}, h, cfg, std::nullopt);
        CHECK(rx[0].norm() == 0.0);
    }

    SUBCASE("a single tap delays the symbol circularly") {
        std::mt19937 rng(29);
        for (int l = 1; l <= cfg.max_delay_samples(); ++l) {
            ChannelTensor h(cfg.max_delay_samples(), 1, 1);
            const Complex c = radarsense::testing::random_complex_gaussian(rng);
            h.at(l, 0, 0) = c;
            Eigen::VectorXcd s(64);
            radarsense::testing::fill_random_unit(s, rng);
            const TimeSignal tx = ofdm_modulate(s, cfg);
            const auto rx = simulate_receive({tx}, h, cfg, std::nullopt);
            const Eigen::VectorXcd data = tx.tail(64);
            for (int t = 0; t < 64; ++t) {
                const Complex expected = c * data[((t - (l - 1)) % 64 + 64) % 64];
                CHECK(std::abs(rx[0][t] - expected) <= 1e-12 * std::abs(c));
            }
        }
    }

    SUBCASE("a too-short prefix is rejected") {
        RadarConfig bad = cfg;
        bad.cp_length = bad.max_delay_samples() - 1;
        const ChannelTensor h(bad.max_delay_samples(), 1, 1);
        const TimeSignal tx = ofdm_modulate(Eigen::VectorXcd::Ones(64), bad);
        CHECK_THROWS_AS(simulate_receive({tx}, h, bad, std::nullopt), std::invalid_argument);
    }

    SUBCASE("generic channels match the dense circulant oracle") {
        std::mt19937 rng(37);
        const RadarConfig mimo = small_config(32, 8, 2, 2, 3);
        for (int trial = 0; trial < 25; ++trial) {
            ChannelTensor h(mimo.max_delay_samples(), 2, 2);
            radarsense::testing::fill_random_gaussian(h.stacked, rng);
            Eigen::MatrixXcd frame(32, 2);
            radarsense::testing::fill_random_unit(frame, rng);
            const auto tx = modulate_frame(frame, mimo);
            const auto rx = simulate_receive(tx, h, mimo, std::nullopt);
            std::vector<Eigen::VectorXcd> tx_data;
            for (const auto& x : tx) tx_data.push_back(x.tail(32));
            const auto oracle = radarsense::testing::circulant_receive(tx_data, h, mimo);
            for (int r = 0; r < 2; ++r) CHECK((rx[r] - oracle[r]).norm() <= 1e-12 * oracle[r].norm());
        }
    }
}

TEST_CASE("pilot demodulation equals the linear model") {
    std::mt19937 rng(41);
    const RadarConfig cfg = small_config(64, 24, 2, 3, 5);
    const auto targets = random_targets(rng, cfg, 3);
    const ChannelTensor h = effective_cluster_channels(build_clusters(targets, cfg), cfg);

    const Eigen::MatrixXcd pilots = build_pilots(cfg);
    const Eigen::MatrixXcd frame = build_tx_frequency_frame(pilots, cfg, 99);
    const auto tx = modulate_frame(frame, cfg);
    const auto rx = simulate_receive(tx, h, cfg, std::nullopt);
    const Eigen::VectorXcd y = demodulate_pilots(rx, cfg);
    REQUIRE(y.size() == 24 * 3);

    const Eigen::MatrixXcd theta = build_measurement_matrix(pilots, cfg);
    const Eigen::VectorXcd model = std::sqrt(cfg.tx_power_w) * (theta * h.stacked);
    CHECK((y - model).norm() <= 1e-10 * model.norm());

    // and the matrix product agrees with the term-by-term frequency model
    const Eigen::VectorXcd direct = radarsense::testing::direct_pilot_model(pilots, h, cfg);
    CHECK((model - direct).norm() <= 1e-10 * direct.norm());

    SUBCASE("zero input demodulates to zero") {
        std::vector<TimeSignal> zeros(3, Eigen::VectorXcd::Zero(64));
        CHECK(demodulate_pilots(zeros, cfg).norm() == 0.0);
    }
}

TEST_CASE("measurement matrix structure") {
    const RadarConfig cfg = reference_config(4);
    const Eigen::MatrixXcd pilots = build_pilots(cfg);
    const Eigen::MatrixXcd theta = build_measurement_matrix(pilots, cfg);
    CHECK(theta.rows() == 300 * 4);
    CHECK(theta.cols() == 10 * 4 * 4);

    const RadarConfig cfg2 = reference_config(2);
    const Eigen::MatrixXcd theta2 = build_measurement_matrix(build_pilots(cfg2), cfg2);
    CHECK(theta2.rows() == 300 * 2);
    CHECK(theta2.cols() == 10 * 2 * 2);

    // first pilot row of every receive block carries the raw pilot symbols
    for (int l = 1; l <= 10; ++l) {
        for (int rx = 0; rx < 4; ++rx) {
            for (int tx = 0; tx < 4; ++tx) {
                const Eigen::Index col = ((l - 1) * 4 + rx) * 4 + tx;
                CHECK(theta(static_cast<Eigen::Index>(rx) * 300, col) == pilots(0, tx));
            }
        }
    }

    SUBCASE("single-cluster blocks inherit pilot orthogonality") {
        RadarConfig one = reference_config(4);
        one.d_max_m = one.range_resolution_m();
        const Eigen::MatrixXcd t1 = build_measurement_matrix(build_pilots(one), one);
        REQUIRE(t1.cols() == 16);
        const Eigen::MatrixXcd gram = t1.adjoint() * t1;
        CHECK((gram - 300.0 * Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("noise statistics through the unitary demodulator") {
    // Noise-only input: per-entry output variance must match the per-sample
    // input variance (unitary transforms preserve it).
    const RadarConfig cfg = small_config(32, 16, 1, 2, 3);
    const ChannelTensor h(cfg.max_delay_samples(), 2, 1);
    const Eigen::MatrixXcd frame = Eigen::MatrixXcd::Zero(32, 1);
    const auto tx = modulate_frame(frame, cfg);

    double sum_sq = 0.0;
    long count = 0;
    for (std::uint64_t draw = 0; draw < 10000; ++draw) {
        const auto rx = simulate_receive(tx, h, cfg, draw);
        const Eigen::VectorXcd y = demodulate_pilots(rx, cfg);
        sum_sq += y.squaredNorm();
        count += y.size();
    }
    const double variance = sum_sq / static_cast<double>(count);
    CHECK(variance == doctest::Approx(cfg.noise_variance_w()).epsilon(0.05));
}

TEST_CASE("circulant eigenvalues follow the tap DFT") {
    // On a small symbol the dense circulant diagonalizes in the DFT basis with
    // the per-bin tap transform on the diagonal.
    std::mt19937 rng(43);
    const int n = 32;
    const RadarConfig cfg = small_config(n, 8, 1, 1, 5);
    Eigen::VectorXcd taps(cfg.max_delay_samples());
    radarsense::testing::fill_random_gaussian(taps, rng);

    const Eigen::MatrixXcd circ = radarsense::testing::dense_circulant(taps, n);
    const Eigen::MatrixXcd w = dft_matrix(n);
    const Eigen::MatrixXcd diag = w * circ * w.adjoint();

    for (int bin = 0; bin < n; ++bin) {
        Complex expected(0.0, 0.0);
        for (int l = 1; l <= taps.size(); ++l)
            expected += taps[l - 1] * std::polar(1.0, -kTwoPi * bin * (l - 1) / n);
        CHECK(std::abs(diag(bin, bin) - expected) <= 1e-10);
    }
    Eigen::MatrixXcd off = diag;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("signal dump round trip") {
    const RadarConfig cfg = small_config(16, 8, 1, 2, 2);
    std::vector<TimeSignal> signals = {Eigen::VectorXd::LinSpaced(16, 0.0, 15.0).cast<Complex>(),
                                       Eigen::VectorXcd::Constant(16, Complex(1.5, -2.5))};
    const std::string path = "dump_test.bin";
    dump_signals(signals, path, 77);

    std::ifstream bin(path, std::ios::binary);
    REQUIRE(bin.good());
    for (const auto& s : signals) {
        for (Eigen::Index t = 0; t < s.size(); ++t) {
            double pair[2];
            bin.read(reinterpret_cast<char*>(pair), sizeof pair);
            CHECK(pair[0] == s[t].real());
            CHECK(pair[1] == s[t].imag());
        }
    }

    std::ifstream meta(path + ".json");
    nlohmann::json sidecar;
    meta >> sidecar;
    CHECK(sidecar["antennas"] == 2);
    CHECK(sidecar["samples"] == 16);
    CHECK(sidecar["seed"] == 77);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}
