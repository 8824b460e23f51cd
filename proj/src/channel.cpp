#include "radarsense/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace radarsense {

namespace {

/// exp(-j 2 pi cycles) with the argument reduced to [-1/2, 1/2] cycles first.
Complex unit_phase(double cycles) {
    const double reduced = std::remainder(cycles, 1.0);
    return std::polar(1.0, -kTwoPi * reduced);
}

}  // namespace

double path_gain(double range_m, const RadarConfig& cfg) {
    if (!(range_m > 0.0)) throw std::domain_error("path gain requires a strictly positive range");
    const double d2 = range_m * range_m;
    return cfg.wavelength_m * cfg.wavelength_m * cfg.rcs_m2 / (64.0 * kPi * kPi * kPi * d2 * d2);
}

Complex path_coefficient(double range_m, const RadarConfig& cfg) {
    return std::sqrt(path_gain(range_m, cfg)) * unit_phase(2.0 * range_m / cfg.wavelength_m);
}

Complex steering_element(double angle_rad, int element_sum, const RadarConfig& cfg) {
    return unit_phase(element_sum * cfg.antenna_spacing_m * std::sin(angle_rad) / cfg.wavelength_m);
}

Eigen::VectorXcd steering_vector(double angle_rad, const RadarConfig& cfg) {
    const int v = cfg.n_virtual_elements();
    Eigen::VectorXcd a(v);
    for (int u = 0; u < v; ++u) a[u] = steering_element(angle_rad, u, cfg);
    return a;
}

Complex scattered_channel(double range_m, double angle_rad, int tx, int rx, const RadarConfig& cfg) {
    return path_coefficient(range_m, cfg) * steering_element(angle_rad, tx + rx, cfg);
}

ChannelTensor effective_cluster_channels(const ClusterMap& map, const RadarConfig& cfg) {
    ChannelTensor h(map.l_max, cfg.n_rx_antennas, cfg.n_tx_antennas);
    for (int l = 1; l <= map.l_max; ++l) {
        for (const auto& member : map.members(l)) {
            const Complex coeff = path_coefficient(member.range_m, cfg);
            for (int rx = 0; rx < cfg.n_rx_antennas; ++rx) {
                for (int tx = 0; tx < cfg.n_tx_antennas; ++tx) {
                    h.at(l, rx, tx) += coeff * steering_element(member.angle_rad, tx + rx, cfg);
                }
            }
        }
    }
    return h;
}

}  // namespace radarsense
