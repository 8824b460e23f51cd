#ifndef RADARSENSE_SCENARIO_IO_HPP
#define RADARSENSE_SCENARIO_IO_HPP

#include <string>
#include <vector>

#include "radarsense/scene.hpp"

namespace radarsense {

struct Scenario {
    std::string id;
    RadarConfig config;
    std::vector<Target> targets;
};

/// Parses a scenario document:
///   {"id": ..., "config": {...}, "targets": [{"id", "range_m", "angle_deg"}]}
/// Config keys: n, delta_f, n_p, q, m_t, m_r, d_a, mu, p, noise_psd,
/// theta_max_deg, d_max, sigma_rcs, c0, delta_theta_deg. All SI except the
/// angles, which files carry in degrees. Missing keys keep defaults; unknown
/// keys are an error.
Scenario parse_scenario(const std::string& json_text);

Scenario load_scenario(const std::string& path);

std::string scenario_to_json(const Scenario& scenario);

void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace radarsense

#endif  // RADARSENSE_SCENARIO_IO_HPP
