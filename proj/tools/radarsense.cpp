// Command-line front end: scenario validation, signal simulation, the
// two-stage estimation pipeline, and the reference-table experiment.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "radarsense/harness.hpp"
#include "radarsense/waveform.hpp"

namespace {

using namespace radarsense;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::vector<std::uint64_t> make_seeds(int n) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{1});
    return seeds;
}

void apply_delta_theta(RadarConfig& cfg, const CLI::Option* opt, double deg) {
    if (opt->count() > 0) cfg.angle_grid_step_rad = deg_to_rad(deg);
}

int validate_or_report(const Scenario& scenario) {
    const ValidationReport report = validate_scenario(scenario.targets, scenario.config);
    for (const auto& issue : report.issues) {
        std::cerr << (issue.severity == Severity::kError ? "error: " : "warning: ") << issue.message
                  << '\n';
    }
    return report.ok() ? kExitOk : kExitValidation;
}

int cmd_validate(const std::string& path) {
    const Scenario scenario = load_scenario(path);
    const int status = validate_or_report(scenario);
    std::cout << (status == kExitOk ? "scenario OK" : "scenario INVALID") << '\n';
    return status;
}

int cmd_simulate(const Scenario& scenario, std::uint64_t seed, bool noiseless,
                 const std::string& dump_path, const std::string& format) {
    const RadarConfig& cfg = scenario.config;
    const ClusterMap clusters = build_clusters(scenario.targets, cfg);
    const ChannelTensor h = effective_cluster_channels(clusters, cfg);
    const Eigen::MatrixXcd pilots = build_pilots(cfg);
    const Eigen::MatrixXcd frame = build_tx_frequency_frame(pilots, cfg, seed);
    const auto tx = modulate_frame(frame, cfg);
    const auto rx = simulate_receive(tx, h, cfg, noiseless ? std::nullopt : std::optional<std::uint64_t>(seed));
    if (!dump_path.empty())
        dump_signals(rx, dump_path, noiseless ? std::nullopt : std::optional<std::uint64_t>(seed));

    std::vector<double> rx_power;
    for (const auto& y : rx) rx_power.push_back(y.squaredNorm() / static_cast<double>(y.size()));

    if (format == "csv") {
        std::cout << "Antenna,MeanRxPower_w\n";
        for (std::size_t r = 0; r < rx_power.size(); ++r) std::cout << r << ',' << rx_power[r] << '\n';
    } else {
        nlohmann::json doc = {
            {"schema_version", 1},
            {"kind", "simulation"},
            {"scenario_id", scenario.id},
            {"seed", seed},
            {"noiseless", noiseless},
            {"l_max", cfg.max_delay_samples()},
            {"occupied_clusters", clusters.occupied()},
            {"noise_variance_w", cfg.noise_variance_w()},
            {"mean_rx_power_w", rx_power},
        };
        if (!dump_path.empty()) doc["dump"] = dump_path;
        std::cout << doc.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_estimate(const Scenario& scenario, std::uint64_t seed, const TrialOptions& opts,
                 const std::string& format) {
    const TrialReport report = run_trial(scenario, seed, opts);
    export_trial(report, format, std::cout);
    return report.failed ? kExitRuntime : kExitOk;
}

int cmd_sweep_rho(const Scenario& scenario, int n_seeds, const TrialOptions& opts,
                  const std::string& format) {
    const RadarConfig& cfg = scenario.config;
    const ClusterMap clusters = build_clusters(scenario.targets, cfg);
    const ChannelTensor h = effective_cluster_channels(clusters, cfg);
    const Eigen::MatrixXcd pilots = build_pilots(cfg);
    const Eigen::MatrixXcd theta = build_measurement_matrix(pilots, cfg);

    nlohmann::json per_seed = nlohmann::json::array();
    std::ostringstream csv;
    csv << "Seed,SelectedRho,Support,RefitResidual\n";
    for (std::uint64_t seed : make_seeds(n_seeds)) {
        const Eigen::MatrixXcd frame = build_tx_frequency_frame(pilots, cfg, seed);
        const auto tx = modulate_frame(frame, cfg);
        const auto rx = simulate_receive(tx, h, cfg,
                                         opts.noiseless ? std::nullopt : std::optional<std::uint64_t>(seed));
        const Eigen::VectorXcd y = demodulate_pilots(rx, cfg);
        const double rho_max = rho_zero_threshold(y, theta, cfg);
        const auto grid = default_rho_grid(rho_max, opts.rho_grid_points);
        const RhoSweepResult sweep = rho_sweep(y, theta, cfg, grid, opts.solver);
        const RhoPathPoint& point = sweep.selected();
        per_seed.push_back({{"seed", seed},
                            {"selected_rho", point.rho},
                            {"support", point.support},
                            {"refit_residual", point.refit_residual}});
        csv << seed << ',' << point.rho << ',';
        for (std::size_t i = 0; i < point.support.size(); ++i)
            csv << (i > 0 ? "|" : "") << point.support[i];
        csv << ',' << point.refit_residual << '\n';
    }

    if (format == "csv") {
        std::cout << csv.str();
    } else {
        nlohmann::json doc = {{"schema_version", 1},
                              {"kind", "rho_sweep"},
                              {"scenario_id", scenario.id},
                              {"true_support", clusters.occupied()},
                              {"per_seed", per_seed}};
        std::cout << doc.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_reproduce(const std::vector<int>& m_values, int n_seeds, const std::string& out_dir,
                  const TrialOptions& opts, int workers, const CLI::Option* dtheta_opt,
                  double dtheta_deg) {
    const auto seeds = make_seeds(n_seeds);
    std::vector<TableSet> tables;
    for (int m : m_values) {
        Scenario scenario = benchmark_scenario(m);
        apply_delta_theta(scenario.config, dtheta_opt, dtheta_deg);
        TableSet set;
        set.m = m;
        set.summary = run_monte_carlo(scenario, seeds, opts, workers);
        tables.push_back(std::move(set));
    }
    std::cout << render_tables(tables);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        for (const TableSet& set : tables) {
            const std::string suffix = "_M" + std::to_string(set.m);
            std::ofstream(out_dir + "/range_table" + suffix + ".csv") << range_table_csv(set.summary);
            std::ofstream(out_dir + "/angle_table" + suffix + ".csv") << angle_table_csv(set.summary);
            std::ofstream(out_dir + "/summary" + suffix + ".json")
                << summary_to_json(set.summary).dump(2) << '\n';
        }
        std::cout << "\nwrote tables to " << out_dir << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    set_log_level(log_level_from_env());

    CLI::App app{"Two-stage MIMO-OFDM radar sensing toolkit"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::uint64_t seed = 1;
    bool noiseless = false;
    std::string dump_path;
    std::string format = "json";
    double delta_theta_deg = 0.25;
    int workers = 1;
    int n_seeds = 20;
    std::string out_dir;
    std::vector<int> m_values = {1, 2, 4};
    double fixed_rho = 0.0;
    bool force_sweep = false;
    std::string trace_path;

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON path")->required();

    auto* simulate = app.add_subcommand("simulate", "synthesize one noise realization");
    simulate->add_option("scenario", scenario_path)->required();
    simulate->add_option("--seed", seed, "trial seed");
    simulate->add_flag("--noiseless", noiseless, "disable receiver noise");
    simulate->add_option("--dump-signals", dump_path, "write raw receive samples + sidecar");
    simulate->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
    auto* sim_dtheta = simulate->add_option("--delta-theta", delta_theta_deg, "angle grid step (deg)");

    auto* estimate = app.add_subcommand("estimate", "run the full two-stage pipeline");
    estimate->add_option("scenario", scenario_path)->required();
    estimate->add_option("--seed", seed, "trial seed");
    estimate->add_flag("--noiseless", noiseless, "disable receiver noise");
    auto* rho_opt = estimate->add_option("--rho", fixed_rho, "fixed Stage-I penalty");
    auto* sweep_opt = estimate->add_flag("--rho-sweep", force_sweep, "penalty sweep (default)");
    rho_opt->excludes(sweep_opt);
    estimate->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
    estimate->add_option("--workers", workers, "grid-search threads");
    auto* est_dtheta = estimate->add_option("--delta-theta", delta_theta_deg, "angle grid step (deg)");
    estimate->add_option("--solver-trace", trace_path, "Stage-I iteration trace CSV");

    auto* sweep = app.add_subcommand("sweep-rho", "Stage-I penalty sweep across seeds");
    sweep->add_option("scenario", scenario_path)->required();
    sweep->add_option("--seeds", n_seeds, "number of seeds (1..N)");
    sweep->add_flag("--noiseless", noiseless);
    sweep->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
    sweep->add_option("--solver-trace", trace_path, "Stage-I iteration trace CSV");

    auto* reproduce = app.add_subcommand("reproduce-tables", "rerun the reference experiment");
    reproduce->add_option("--M", m_values, "antenna counts")->delimiter(',');
    reproduce->add_option("--seeds", n_seeds, "number of seeds (1..N)");
    reproduce->add_option("--out", out_dir, "directory for CSV/JSON tables");
    reproduce->add_option("--workers", workers, "concurrent trials");
    auto* rep_dtheta = reproduce->add_option("--delta-theta", delta_theta_deg, "angle grid step (deg)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(scenario_path);

        TrialOptions opts;
        opts.noiseless = noiseless;
        opts.stage2.workers = workers;
        opts.solver.trace_csv_path = trace_path;
        if (rho_opt->count() > 0) opts.fixed_rho = fixed_rho;

        if (reproduce->parsed())
            return cmd_reproduce(m_values, n_seeds, out_dir, opts, workers, rep_dtheta, delta_theta_deg);

        Scenario scenario = load_scenario(scenario_path);
        if (simulate->parsed()) {
            apply_delta_theta(scenario.config, sim_dtheta, delta_theta_deg);
            if (const int status = validate_or_report(scenario); status != kExitOk) return status;
            return cmd_simulate(scenario, seed, noiseless, dump_path, format);
        }
        if (estimate->parsed()) {
            apply_delta_theta(scenario.config, est_dtheta, delta_theta_deg);
            if (const int status = validate_or_report(scenario); status != kExitOk) return status;
            return cmd_estimate(scenario, seed, opts, format);
        }
        if (sweep->parsed()) {
            if (const int status = validate_or_report(scenario); status != kExitOk) return status;
            return cmd_sweep_rho(scenario, n_seeds, opts, format);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
