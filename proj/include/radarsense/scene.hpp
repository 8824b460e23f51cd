#ifndef RADARSENSE_SCENE_HPP
#define RADARSENSE_SCENE_HPP

#include <span>
#include <vector>

#include "radarsense/config.hpp"

namespace radarsense {

/// A point scatterer, located by range and angle from the radar.
struct Target {
    int id = 0;
    double range_m = 0.0;
    double angle_rad = 0.0;
};

struct ClusterMember {
    double range_m = 0.0;
    double angle_rad = 0.0;
    int target_id = 0;
};

/// Targets partitioned into range clusters. Cluster l (1-based, equal to the
/// scattering delay in samples) holds every target whose round-trip delay is
/// l samples; members are sorted by ascending angle, ties by ascending range.
struct ClusterMap {
    int l_max = 0;
    std::vector<std::vector<ClusterMember>> clusters;  // clusters[l-1]

    const std::vector<ClusterMember>& members(int delay) const { return clusters.at(delay - 1); }
    bool empty_cluster(int delay) const { return members(delay).empty(); }
    int cluster_size(int delay) const { return static_cast<int>(members(delay).size()); }
    int total_targets() const;

    /// Delays of the clusters that hold at least one target, ascending.
    std::vector<int> occupied() const;
};

/// Range resolution c0 / (2 N delta_f) in meters.
double range_resolution(const RadarConfig& cfg);

/// Round-trip delay in samples, ceil(2 N delta_f d / c0), of a scatterer at
/// range d. The result identifies the target's range cluster and lies in
/// [1, max_delay_samples]. Throws std::domain_error for d outside (0, d_max].
int delay_samples(double range_m, const RadarConfig& cfg);

/// Partitions targets into range clusters by their scattering delay.
ClusterMap build_clusters(std::span<const Target> targets, const RadarConfig& cfg);

/// Full scenario check: config invariants, target bounds, and identifiability
/// warnings for clusters holding more targets than the virtual array can
/// uniquely resolve. Returns a report instead of throwing.
ValidationReport validate_scenario(std::span<const Target> targets, const RadarConfig& cfg);

}  // namespace radarsense

#endif  // RADARSENSE_SCENE_HPP
