#ifndef RADARSENSE_CONFIG_HPP
#define RADARSENSE_CONFIG_HPP

#include <cmath>
#include <string>
#include <vector>

namespace radarsense {

/// All physical and waveform parameters of the mono-static MIMO-OFDM radar.
///
/// Angles are radians and every other quantity is SI. Defaults describe the
/// reference 2.6 GHz setup used throughout the test suite.
struct RadarConfig {
    int n_subcarriers = 1024;               // N
    double subcarrier_spacing_hz = 15e3;     // delta_f
    int n_pilot_subcarriers = 300;           // N_P, pilots occupy the first N_P bins
    int cp_length = 72;                      // Q, cyclic prefix samples
    int n_tx_antennas = 4;                   // M_T
    int n_rx_antennas = 4;                   // M_R
    double antenna_spacing_m = 0.9 * (3e8 / 2.6e9);   // d_A
    double wavelength_m = 3e8 / 2.6e9;       // mu, single carrier wavelength
    double tx_power_w = 1.9952623149688796;  // p, per antenna per sample (33 dBm)
    double noise_psd_w_per_hz = 1.2589254117941672e-20;  // one-sided (-169 dBm/Hz)
    double theta_max_rad = 1.5707963267948966;           // maximum sensing angle
    double d_max_m = 97.65625;               // maximum detection range
    double rcs_m2 = 5.011872336272722;       // sigma_RCS (7 dBsm)
    double c0_m_per_s = 3e8;                 // propagation speed
    double angle_grid_step_rad = 0.25 * 3.141592653589793 / 180.0;  // delta_theta

    double sample_rate_hz() const { return n_subcarriers * subcarrier_spacing_hz; }

    /// Smallest range separation resolved by sample delay alone, c0 / (2 N delta_f).
    double range_resolution_m() const { return c0_m_per_s / (2.0 * sample_rate_hz()); }

    /// Delay in samples of a scatterer at the maximum detection range; also the
    /// number of range clusters.
    int max_delay_samples() const;

    /// Per-sample complex noise variance: one-sided PSD times the sampled bandwidth.
    double noise_variance_w() const { return noise_psd_w_per_hz * sample_rate_hz(); }

    /// Number of distinct virtual array elements, M_T + M_R - 1.
    int n_virtual_elements() const { return n_tx_antennas + n_rx_antennas - 1; }

    /// Largest per-cluster target count with a unique solution, floor((M_T+M_R-2)/2).
    int max_identifiable_targets() const { return (n_tx_antennas + n_rx_antennas - 2) / 2; }

    /// Number of points in the angle search grid {delta_theta, ..., theta_max}.
    int n_angle_grid_points() const;
};

enum class Severity { kWarning, kError };

struct ValidationIssue {
    Severity severity = Severity::kError;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const {
        for (const auto& issue : issues)
            if (issue.severity == Severity::kError) return false;
        return true;
    }
    int warning_count() const {
        int n = 0;
        for (const auto& issue : issues)
            if (issue.severity == Severity::kWarning) ++n;
        return n;
    }
};

/// Checks every RadarConfig invariant (positivity, pilot count, CP length,
/// sensing-angle and antenna-spacing limits). Errors only, never warnings.
ValidationReport validate_config(const RadarConfig& cfg);

/// Throws std::invalid_argument if validate_config reports an error.
void require_valid(const RadarConfig& cfg);

namespace detail {

/// ceil(x) with exact-integer inputs snapped down: values within a relative
/// 1e-12 of an integer count as that integer, so a range exactly on a cluster
/// boundary lands in the lower cluster.
inline long ceil_with_tolerance(double x) {
    const double eps = 1e-12 * std::max(1.0, std::abs(x));
    return static_cast<long>(std::ceil(x - eps));
}

}  // namespace detail

inline int RadarConfig::max_delay_samples() const {
    const double x = 2.0 * d_max_m * sample_rate_hz() / c0_m_per_s;
    return static_cast<int>(std::max(1L, detail::ceil_with_tolerance(x)));
}

inline int RadarConfig::n_angle_grid_points() const {
    return static_cast<int>(std::llround(theta_max_rad / angle_grid_step_rad));
}

}  // namespace radarsense

#endif  // RADARSENSE_CONFIG_HPP
