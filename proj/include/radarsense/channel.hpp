#ifndef RADARSENSE_CHANNEL_HPP
#define RADARSENSE_CHANNEL_HPP

#include "radarsense/scene.hpp"
#include "radarsense/types.hpp"

namespace radarsense {

/// Two-way propagation and scattering attenuation, mu^2 sigma_RCS / (64 pi^3 d^4).
/// Throws std::domain_error for d <= 0.
double path_gain(double range_m, const RadarConfig& cfg);

/// Complex round-trip path coefficient sqrt(G(d)) exp(-j 4 pi d / mu). The
/// phase argument is reduced modulo one wavelength cycle before
/// exponentiation, so large d / mu ratios do not lose precision.
Complex path_coefficient(double range_m, const RadarConfig& cfg);

/// ULA phase factor exp(-j 2 pi u d_A sin(theta) / mu) of virtual element
/// u = tx + rx (0-based antenna indices). Unit modulus.
Complex steering_element(double angle_rad, int element_sum, const RadarConfig& cfg);

/// All virtual-element phase factors of one arrival angle, length M_T + M_R - 1.
Eigen::VectorXcd steering_vector(double angle_rad, const RadarConfig& cfg);

/// Scattered channel from transmit antenna tx to a point target to receive
/// antenna rx (0-based indices): path_coefficient(d) * steering_element(theta, tx+rx).
Complex scattered_channel(double range_m, double angle_rad, int tx, int rx, const RadarConfig& cfg);

/// Effective scattered channels h[l][rx][tx] of every range cluster, stored as
/// one stacked vector: cluster-major, then receive antenna, then transmit
/// antenna. The stacked order is exactly the unknown vector of the pilot
/// measurement model, so Stage I estimates reuse this type unchanged.
struct ChannelTensor {
    int l_max = 0;
    int n_rx = 0;
    int n_tx = 0;
    Eigen::VectorXcd stacked;

    ChannelTensor() = default;
    ChannelTensor(int l_max_, int n_rx_, int n_tx_)
        : l_max(l_max_), n_rx(n_rx_), n_tx(n_tx_),
          stacked(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(l_max_) * n_rx_ * n_tx_)) {}

    int group_size() const { return n_rx * n_tx; }

    /// Entry for cluster delay l (1-based) and 0-based antenna indices.
    Complex& at(int l, int rx, int tx) { return stacked[offset(l, rx, tx)]; }
    Complex at(int l, int rx, int tx) const { return stacked[offset(l, rx, tx)]; }

    /// The M_R * M_T block of one cluster, receive-antenna-major.
    auto cluster(int l) { return stacked.segment(static_cast<Eigen::Index>(l - 1) * group_size(), group_size()); }
    auto cluster(int l) const {
        return stacked.segment(static_cast<Eigen::Index>(l - 1) * group_size(), group_size());
    }

    double cluster_norm(int l) const { return cluster(l).norm(); }

  private:
    Eigen::Index offset(int l, int rx, int tx) const {
        return (static_cast<Eigen::Index>(l - 1) * n_rx + rx) * n_tx + tx;
    }
};

/// Sums scattered channels over each cluster's members; empty clusters stay zero.
ChannelTensor effective_cluster_channels(const ClusterMap& map, const RadarConfig& cfg);

}  // namespace radarsense

#endif  // RADARSENSE_CHANNEL_HPP
