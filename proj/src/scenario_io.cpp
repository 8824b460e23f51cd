#include "radarsense/scenario_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "radarsense/types.hpp"

namespace radarsense {

namespace {

using nlohmann::json;

void read_config(const json& j, RadarConfig& cfg) {
    for (const auto& [key, value] : j.items()) {
        if (key == "n")
            cfg.n_subcarriers = value.get<int>();
        else if (key == "delta_f")
            cfg.subcarrier_spacing_hz = value.get<double>();
        else if (key == "n_p")
            cfg.n_pilot_subcarriers = value.get<int>();
        else if (key == "q")
            cfg.cp_length = value.get<int>();
        else if (key == "m_t")
            cfg.n_tx_antennas = value.get<int>();
        else if (key == "m_r")
            cfg.n_rx_antennas = value.get<int>();
        else if (key == "d_a")
            cfg.antenna_spacing_m = value.get<double>();
        else if (key == "mu")
            cfg.wavelength_m = value.get<double>();
        else if (key == "p")
            cfg.tx_power_w = value.get<double>();
        else if (key == "noise_psd")
            cfg.noise_psd_w_per_hz = value.get<double>();
        else if (key == "theta_max_deg")
            cfg.theta_max_rad = deg_to_rad(value.get<double>());
        else if (key == "d_max")
            cfg.d_max_m = value.get<double>();
        else if (key == "sigma_rcs")
            cfg.rcs_m2 = value.get<double>();
        else if (key == "c0")
            cfg.c0_m_per_s = value.get<double>();
        else if (key == "delta_theta_deg")
            cfg.angle_grid_step_rad = deg_to_rad(value.get<double>());
        else
            throw std::runtime_error("unknown config key \"" + key + "\"");
    }
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("scenario is not valid JSON: ") + e.what());
    }
    Scenario scenario;
    if (doc.contains("id")) scenario.id = doc["id"].get<std::string>();
    if (doc.contains("config")) read_config(doc["config"], scenario.config);
    if (doc.contains("targets")) {
        for (const auto& t : doc["targets"]) {
            Target target;
            target.id = t.at("id").get<int>();
            target.range_m = t.at("range_m").get<double>();
            target.angle_rad = deg_to_rad(t.at("angle_deg").get<double>());
            scenario.targets.push_back(target);
        }
    }
    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::string scenario_to_json(const Scenario& scenario) {
    const RadarConfig& cfg = scenario.config;
    json doc;
    doc["id"] = scenario.id;
    doc["config"] = {
        {"n", cfg.n_subcarriers},
        {"delta_f", cfg.subcarrier_spacing_hz},
        {"n_p", cfg.n_pilot_subcarriers},
        {"q", cfg.cp_length},
        {"m_t", cfg.n_tx_antennas},
        {"m_r", cfg.n_rx_antennas},
        {"d_a", cfg.antenna_spacing_m},
        {"mu", cfg.wavelength_m},
        {"p", cfg.tx_power_w},
        {"noise_psd", cfg.noise_psd_w_per_hz},
        {"theta_max_deg", rad_to_deg(cfg.theta_max_rad)},
        {"d_max", cfg.d_max_m},
        {"sigma_rcs", cfg.rcs_m2},
        {"c0", cfg.c0_m_per_s},
        {"delta_theta_deg", rad_to_deg(cfg.angle_grid_step_rad)},
    };
    doc["targets"] = json::array();
    for (const Target& t : scenario.targets) {
        doc["targets"].push_back({
            {"id", t.id},
            {"range_m", t.range_m},
            {"angle_deg", rad_to_deg(t.angle_rad)},
        });
    }
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << scenario_to_json(scenario);
}

}  // namespace radarsense
