#include "radarsense/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace radarsense {

int ClusterMap::total_targets() const {
    int n = 0;
    for (const auto& c : clusters) n += static_cast<int>(c.size());
    return n;
}

std::vector<int> ClusterMap::occupied() const {
    std::vector<int> out;
    for (int l = 1; l <= l_max; ++l)
        if (!clusters[l - 1].empty()) out.push_back(l);
    return out;
}

double range_resolution(const RadarConfig& cfg) {
    return cfg.range_resolution_m();
}

int delay_samples(double range_m, const RadarConfig& cfg) {
    if (!(range_m > 0.0) || range_m > cfg.d_max_m) {
        std::ostringstream msg;
        msg << "target range " << range_m << " m outside (0, " << cfg.d_max_m << "]";
        throw std::domain_error(msg.str());
    }
    const double x = 2.0 * cfg.sample_rate_hz() * range_m / cfg.c0_m_per_s;
    const long l = std::max(1L, detail::ceil_with_tolerance(x));
    return static_cast<int>(std::min<long>(l, cfg.max_delay_samples()));
}

ClusterMap build_clusters(std::span<const Target> targets, const RadarConfig& cfg) {
    ClusterMap map;
    map.l_max = cfg.max_delay_samples();
    map.clusters.assign(map.l_max, {});
    for (const auto& t : targets) {
        const int l = delay_samples(t.range_m, cfg);
        map.clusters[l - 1].push_back({t.range_m, t.angle_rad, t.id});
    }
    for (auto& members : map.clusters) {
        std::sort(members.begin(), members.end(), [](const ClusterMember& a, const ClusterMember& b) {
            if (a.angle_rad != b.angle_rad) return a.angle_rad < b.angle_rad;
            return a.range_m < b.range_m;
        });
    }
    return map;
}

namespace {

void check_positive(double value, const char* name, ValidationReport& report) {
    if (!(value > 0.0)) {
        report.issues.push_back({Severity::kError, std::string(name) + " must be strictly positive"});
    }
}

}  // namespace

ValidationReport validate_config(const RadarConfig& cfg) {
    ValidationReport report;
    if (cfg.n_subcarriers < 1)
        report.issues.push_back({Severity::kError, "subcarrier count must be >= 1"});
    if (cfg.n_pilot_subcarriers < 1)
        report.issues.push_back({Severity::kError, "pilot subcarrier count must be >= 1"});
    if (cfg.n_tx_antennas < 1 || cfg.n_rx_antennas < 1)
        report.issues.push_back({Severity::kError, "antenna counts must be >= 1"});
    check_positive(cfg.subcarrier_spacing_hz, "subcarrier spacing", report);
    check_positive(cfg.antenna_spacing_m, "antenna spacing", report);
    check_positive(cfg.wavelength_m, "wavelength", report);
    check_positive(cfg.tx_power_w, "transmit power", report);
    check_positive(cfg.noise_psd_w_per_hz, "noise PSD", report);
    check_positive(cfg.theta_max_rad, "maximum sensing angle", report);
    check_positive(cfg.d_max_m, "maximum detection range", report);
    check_positive(cfg.rcs_m2, "radar cross section", report);
    check_positive(cfg.c0_m_per_s, "propagation speed", report);
    check_positive(cfg.angle_grid_step_rad, "angle grid step", report);
    if (cfg.n_pilot_subcarriers > cfg.n_subcarriers)
        report.issues.push_back({Severity::kError, "pilot count exceeds subcarrier count"});
    if (cfg.n_pilot_subcarriers < cfg.n_tx_antennas)
        report.issues.push_back(
            {Severity::kError, "orthogonal pilots require at least as many pilot subcarriers as transmit antennas"});
    if (cfg.theta_max_rad > 1.5707963267948966 * (1.0 + 1e-12))
        report.issues.push_back({Severity::kError, "maximum sensing angle exceeds pi/2, angle estimates would alias"});
    if (!report.ok()) return report;  // derived quantities below need sane inputs

    if (cfg.antenna_spacing_m > cfg.wavelength_m / std::sin(cfg.theta_max_rad) * (1.0 + 1e-12)) {
        report.issues.push_back(
            {Severity::kError, "antenna spacing exceeds wavelength / sin(theta_max), angle estimates would alias"});
    }
    if (cfg.cp_length < cfg.max_delay_samples()) {
        std::ostringstream msg;
        msg << "cyclic prefix length " << cfg.cp_length << " shorter than the maximum delay of "
            << cfg.max_delay_samples() << " samples";
        report.issues.push_back({Severity::kError, msg.str()});
    }
    if (cfg.cp_length >= cfg.n_subcarriers)
        report.issues.push_back({Severity::kError, "cyclic prefix must be shorter than the OFDM symbol"});
    return report;
}

void require_valid(const RadarConfig& cfg) {
    const auto report = validate_config(cfg);
    if (!report.ok()) {
        std::string what = "invalid radar config:";
        for (const auto& issue : report.issues)
            if (issue.severity == Severity::kError) what += " " + issue.message + ";";
        throw std::invalid_argument(what);
    }
}

ValidationReport validate_scenario(std::span<const Target> targets, const RadarConfig& cfg) {
    ValidationReport report = validate_config(cfg);
    if (!report.ok()) return report;

    for (const auto& t : targets) {
        if (!(t.range_m > 0.0) || t.range_m > cfg.d_max_m) {
            std::ostringstream msg;
            msg << "target " << t.id << ": range " << t.range_m << " m outside (0, " << cfg.d_max_m << "]";
            report.issues.push_back({Severity::kError, msg.str()});
        }
        if (!(t.angle_rad > 0.0) || t.angle_rad > cfg.theta_max_rad * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "target " << t.id << ": angle " << t.angle_rad << " rad outside (0, " << cfg.theta_max_rad << "]";
            report.issues.push_back({Severity::kError, msg.str()});
        }
    }
    if (!report.ok()) return report;

    const int k_max = cfg.max_identifiable_targets();
    const ClusterMap map = build_clusters(targets, cfg);
    for (int l = 1; l <= map.l_max; ++l) {
        if (map.cluster_size(l) > k_max) {
            std::ostringstream msg;
            msg << "cluster " << l << " holds " << map.cluster_size(l) << " targets, more than the "
                << k_max << " uniquely identifiable with " << cfg.n_tx_antennas << "x" << cfg.n_rx_antennas
                << " antennas";
            report.issues.push_back({Severity::kWarning, msg.str()});
        }
    }
    return report;
}

}  // namespace radarsense
