#include "radarsense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "radarsense/waveform.hpp"

namespace radarsense {

namespace {

using nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double maximum(const std::vector<double>& values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    return *std::max_element(values.begin(), values.end());
}

struct PairCost {
    double cost = 0.0;
    TargetMatch match;
};

/// Minimum-cost injective assignment between a cluster's estimates and its
/// ground-truth members, brute force (both sides hold at most a handful).
std::vector<TargetMatch> match_cluster(const ClusterEstimate& estimate,
                                       const std::vector<ClusterMember>& truth, const RadarConfig& cfg) {
    const int n_est = estimate.k_star;
    const int n_truth = static_cast<int>(truth.size());
    const int n = std::min(n_est, n_truth);
    if (n == 0) return {};

    const double delta_d = cfg.range_resolution_m();
    auto pair_cost = [&](int e, int t) {
        PairCost pc;
        pc.match.target_id = truth[t].target_id;
        pc.match.cluster = estimate.cluster;
        pc.match.estimate_index = e;
        pc.match.real_range_m = truth[t].range_m;
        pc.match.est_range_m = estimate.ranges_m[e];
        pc.match.range_error_m = std::abs(estimate.ranges_m[e] - truth[t].range_m);
        pc.match.real_angle_deg = rad_to_deg(truth[t].angle_rad);
        pc.match.est_angle_deg = rad_to_deg(estimate.angles[e]);
        pc.match.angle_error_deg = std::abs(pc.match.est_angle_deg - pc.match.real_angle_deg);
        pc.cost = pc.match.angle_error_deg + 0.1 * pc.match.range_error_m / delta_d;
        return pc;
    };

    // Enumerate injective maps from the smaller side into the larger side.
    const bool estimates_smaller = n_est <= n_truth;
    const int small_n = estimates_smaller ? n_est : n_truth;
    const int large_n = estimates_smaller ? n_truth : n_est;

    std::vector<int> chosen(small_n, -1);
    std::vector<bool> used(large_n, false);
    std::vector<TargetMatch> best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<TargetMatch> current(small_n);

    auto recurse = [&](auto&& self, int depth, double cost) -> void {
        if (cost >= best_cost) return;
        if (depth == small_n) {
            best_cost = cost;
            best = current;
            return;
        }
        for (int candidate = 0; candidate < large_n; ++candidate) {
            if (used[candidate]) continue;
            const int e = estimates_smaller ? depth : candidate;
            const int t = estimates_smaller ? candidate : depth;
            const PairCost pc = pair_cost(e, t);
            used[candidate] = true;
            current[depth] = pc.match;
            self(self, depth + 1, cost + pc.cost);
            used[candidate] = false;
        }
    };
    recurse(recurse, 0, 0.0);

    std::sort(best.begin(), best.end(),
              [](const TargetMatch& a, const TargetMatch& b) { return a.target_id < b.target_id; });
    return best;
}

std::string issues_to_string(const ValidationReport& report) {
    std::string out;
    for (const auto& issue : report.issues) {
        if (!out.empty()) out += "; ";
        out += issue.message;
    }
    return out;
}

std::atomic<int> g_log_level{static_cast<int>(LogLevel::kError)};
std::atomic<bool> g_log_level_initialized{false};

}  // namespace

TrialReport run_trial(const Scenario& scenario, std::uint64_t seed, const TrialOptions& opts) {
    TrialReport report;
    report.seed = seed;
    report.scenario_id = scenario.id;
    report.noiseless = opts.noiseless;

    const auto t_start = std::chrono::steady_clock::now();
    try {
        const RadarConfig& cfg = scenario.config;
        const ValidationReport validation = validate_scenario(scenario.targets, cfg);
        if (!validation.ok()) throw std::invalid_argument("scenario invalid: " + issues_to_string(validation));

        const ClusterMap clusters = build_clusters(scenario.targets, cfg);
        const ChannelTensor h_true = effective_cluster_channels(clusters, cfg);

        const Eigen::MatrixXcd pilots = build_pilots(cfg);
        const Eigen::MatrixXcd frame = build_tx_frequency_frame(pilots, cfg, seed);
        const std::vector<TimeSignal> tx = modulate_frame(frame, cfg);
        const std::vector<TimeSignal> rx =
            simulate_receive(tx, h_true, cfg, opts.noiseless ? std::nullopt : std::optional<std::uint64_t>(seed));
        const Eigen::VectorXcd y_pilot = demodulate_pilots(rx, cfg);
        const Eigen::MatrixXcd theta = build_measurement_matrix(pilots, cfg);

        const auto t_stage1 = std::chrono::steady_clock::now();
        ChannelTensor refit;
        if (opts.fixed_rho) {
            GroupLassoOptions solver = opts.solver;
            solver.rho = *opts.fixed_rho;
            const StageOneResult result = group_lasso_solve(y_pilot, theta, cfg, solver);
            report.selected_rho = *opts.fixed_rho;
            report.support = result.support;
            report.group_norms = result.group_norms;
            report.kkt_residual = result.kkt_residual;
            report.stage1_converged = result.converged;
            refit = refit_support(y_pilot, theta, result.support, cfg);
        } else {
            const double rho_max = rho_zero_threshold(y_pilot, theta, cfg);
            const std::vector<double> grid = default_rho_grid(rho_max, opts.rho_grid_points);
            const RhoSweepResult sweep = rho_sweep(y_pilot, theta, cfg, grid, opts.solver);
            const RhoPathPoint& point = sweep.selected();
            report.selected_rho = point.rho;
            report.support = point.support;
            report.group_norms = point.result.group_norms;
            report.kkt_residual = point.result.kkt_residual;
            report.stage1_converged = point.result.converged;
            refit = point.refit;
        }
        const auto t_stage2 = std::chrono::steady_clock::now();

        for (int l : report.support)
            report.estimates.push_back(estimate_cluster(refit.cluster(l), l, cfg, opts.stage2));

        for (const ClusterEstimate& estimate : report.estimates) {
            const auto matches = match_cluster(estimate, clusters.members(estimate.cluster), cfg);
            report.matches.insert(report.matches.end(), matches.begin(), matches.end());
        }
        std::sort(report.matches.begin(), report.matches.end(),
                  [](const TargetMatch& a, const TargetMatch& b) { return a.target_id < b.target_id; });

        const auto t_end = std::chrono::steady_clock::now();
        using ms = std::chrono::duration<double, std::milli>;
        report.timings.stage1_ms = ms(t_stage2 - t_stage1).count();
        report.timings.stage2_ms = ms(t_end - t_stage2).count();
        report.timings.total_ms = ms(t_end - t_start).count();
    } catch (const std::exception& e) {
        report.failed = true;
        report.error = e.what();
        using ms = std::chrono::duration<double, std::milli>;
        report.timings.total_ms = ms(std::chrono::steady_clock::now() - t_start).count();
        log_message(LogLevel::kError,
                    "trial seed " + std::to_string(seed) + " failed: " + report.error);
    }
    return report;
}

ExperimentSummary run_monte_carlo(const Scenario& scenario, std::span<const std::uint64_t> seeds,
                                  const TrialOptions& opts, int workers) {
    if (seeds.empty()) throw std::invalid_argument("need at least one seed");
    std::vector<TrialReport> reports(seeds.size());
    const int n_workers = std::clamp<int>(workers, 1, static_cast<int>(seeds.size()));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) reports[i] = run_trial(scenario, seeds[i], opts);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < seeds.size(); i += n_workers)
                    reports[i] = run_trial(scenario, seeds[i], opts);
            });
        }
        for (auto& th : pool) th.join();
    }

    ExperimentSummary summary;
    summary.scenario_id = scenario.id;
    summary.n_trials = static_cast<int>(seeds.size());

    ClusterMap clusters;
    if (validate_scenario(scenario.targets, scenario.config).ok()) {
        clusters = build_clusters(scenario.targets, scenario.config);
        summary.true_support = clusters.occupied();
    } else {
        // every trial has failed; aggregate counts only
        for (const auto& report : reports) summary.n_failed += report.failed ? 1 : 0;
        return summary;
    }

    int exact_support = 0;
    std::vector<const TrialReport*> ok;
    for (const auto& report : reports) {
        if (report.failed) {
            ++summary.n_failed;
            continue;
        }
        ok.push_back(&report);
        if (report.support == summary.true_support) ++exact_support;
    }
    summary.support_recovery_rate =
        ok.empty() ? 0.0 : static_cast<double>(exact_support) / static_cast<double>(ok.size());

    for (const Target& target : scenario.targets) {
        TargetStats stats;
        stats.target_id = target.id;
        stats.cluster = delay_samples(target.range_m, scenario.config);
        stats.real_range_m = target.range_m;
        stats.real_angle_deg = rad_to_deg(target.angle_rad);
        std::vector<double> range_errors, angle_errors, est_ranges, est_angles;
        for (const TrialReport* report : ok) {
            for (const TargetMatch& match : report->matches) {
                if (match.target_id != target.id) continue;
                range_errors.push_back(match.range_error_m);
                angle_errors.push_back(match.angle_error_deg);
                est_ranges.push_back(match.est_range_m);
                est_angles.push_back(match.est_angle_deg);
            }
        }
        stats.n_matched = static_cast<int>(range_errors.size());
        stats.median_range_error_m = median(range_errors);
        stats.mean_range_error_m = mean(range_errors);
        stats.max_range_error_m = maximum(range_errors);
        stats.median_angle_error_deg = median(angle_errors);
        stats.mean_angle_error_deg = mean(angle_errors);
        stats.max_angle_error_deg = maximum(angle_errors);
        stats.median_est_range_m = median(est_ranges);
        stats.median_est_angle_deg = median(est_angles);
        summary.per_target.push_back(stats);
    }

    for (int cluster : summary.true_support) {
        ClusterStats stats;
        stats.cluster = cluster;
        stats.n_truth = clusters.cluster_size(cluster);
        std::vector<double> range_errors, angle_errors;
        for (const TrialReport* report : ok) {
            for (const TargetMatch& match : report->matches) {
                if (match.cluster != cluster) continue;
                range_errors.push_back(match.range_error_m);
                angle_errors.push_back(match.angle_error_deg);
            }
            for (const ClusterEstimate& estimate : report->estimates)
                if (estimate.cluster == cluster && !estimate.identifiable)
                    stats.flagged_unidentifiable = true;
        }
        stats.n_matches = static_cast<int>(range_errors.size());
        stats.median_range_error_m = median(range_errors);
        stats.median_angle_error_deg = median(angle_errors);
        summary.per_cluster.push_back(stats);
    }
    return summary;
}

Scenario benchmark_scenario(int m) {
    if (m < 1) throw std::invalid_argument("antenna count must be >= 1");
    Scenario scenario;
    scenario.id = "benchmark-M" + std::to_string(m);
    scenario.config.n_tx_antennas = m;
    scenario.config.n_rx_antennas = m;
    scenario.targets = {
        {1, 22.765, deg_to_rad(78.810)},
        {2, 28.170, deg_to_rad(83.228)},
        {3, 81.611, deg_to_rad(31.903)},
        {4, 86.623, deg_to_rad(10.404)},
    };
    return scenario;
}

std::vector<TableSet> reproduce_tables(std::span<const int> m_values, std::span<const std::uint64_t> seeds,
                                       const TrialOptions& opts, int workers) {
    std::vector<TableSet> tables;
    for (int m : m_values) {
        TableSet set;
        set.m = m;
        const Scenario scenario = benchmark_scenario(m);
        log_message(LogLevel::kInfo, "reproducing tables for M = " + std::to_string(m));
        set.summary = run_monte_carlo(scenario, seeds, opts, workers);
        tables.push_back(std::move(set));
    }
    return tables;
}

// --- serialization -----------------------------------------------------------

nlohmann::json trial_to_json(const TrialReport& report, bool include_timings) {
    json estimates = json::array();
    for (const ClusterEstimate& e : report.estimates) {
        json coeffs = json::array();
        for (const Complex& c : e.coefficients) coeffs.push_back({{"re", c.real()}, {"im", c.imag()}});
        json angles_deg = json::array();
        for (double a : e.angles) angles_deg.push_back(rad_to_deg(a));
        estimates.push_back({
            {"cluster", e.cluster},
            {"k_star", e.k_star},
            {"angles_deg", angles_deg},
            {"coefficients", coeffs},
            {"ranges_m", e.ranges_m},
            {"residual", e.residual},
            {"identifiable", e.identifiable},
        });
    }
    json matches = json::array();
    for (const TargetMatch& m : report.matches) {
        matches.push_back({
            {"target_id", m.target_id},
            {"cluster", m.cluster},
            {"estimate_index", m.estimate_index},
            {"real_range_m", m.real_range_m},
            {"est_range_m", m.est_range_m},
            {"range_error_m", m.range_error_m},
            {"real_angle_deg", m.real_angle_deg},
            {"est_angle_deg", m.est_angle_deg},
            {"angle_error_deg", m.angle_error_deg},
        });
    }
    json doc = {
        {"schema_version", 1},
        {"kind", "trial_report"},
        {"seed", report.seed},
        {"scenario_id", report.scenario_id},
        {"noiseless", report.noiseless},
        {"failed", report.failed},
        {"error", report.error},
        {"selected_rho", report.selected_rho},
        {"support", report.support},
        {"group_norms", std::vector<double>(report.group_norms.data(),
                                            report.group_norms.data() + report.group_norms.size())},
        {"kkt_residual", report.kkt_residual},
        {"stage1_converged", report.stage1_converged},
        {"estimates", estimates},
        {"matches", matches},
    };
    if (include_timings) {
        doc["timings_ms"] = {{"stage1", report.timings.stage1_ms},
                             {"stage2", report.timings.stage2_ms},
                             {"total", report.timings.total_ms}};
    }
    return doc;
}

TrialReport trial_from_json(const nlohmann::json& j) {
    TrialReport report;
    report.seed = j.at("seed").get<std::uint64_t>();
    report.scenario_id = j.at("scenario_id").get<std::string>();
    report.noiseless = j.at("noiseless").get<bool>();
    report.failed = j.at("failed").get<bool>();
    report.error = j.at("error").get<std::string>();
    report.selected_rho = j.at("selected_rho").get<double>();
    report.support = j.at("support").get<std::vector<int>>();
    const auto norms = j.at("group_norms").get<std::vector<double>>();
    report.group_norms = Eigen::Map<const Eigen::VectorXd>(norms.data(), norms.size());
    report.kkt_residual = j.at("kkt_residual").get<double>();
    report.stage1_converged = j.at("stage1_converged").get<bool>();
    for (const auto& e : j.at("estimates")) {
        ClusterEstimate estimate;
        estimate.cluster = e.at("cluster").get<int>();
        estimate.k_star = e.at("k_star").get<int>();
        for (const auto& a : e.at("angles_deg")) estimate.angles.push_back(deg_to_rad(a.get<double>()));
        for (const auto& c : e.at("coefficients"))
            estimate.coefficients.emplace_back(c.at("re").get<double>(), c.at("im").get<double>());
        estimate.ranges_m = e.at("ranges_m").get<std::vector<double>>();
        estimate.residual = e.at("residual").get<double>();
        estimate.identifiable = e.at("identifiable").get<bool>();
        report.estimates.push_back(std::move(estimate));
    }
    for (const auto& m : j.at("matches")) {
        TargetMatch match;
        match.target_id = m.at("target_id").get<int>();
        match.cluster = m.at("cluster").get<int>();
        match.estimate_index = m.at("estimate_index").get<int>();
        match.real_range_m = m.at("real_range_m").get<double>();
        match.est_range_m = m.at("est_range_m").get<double>();
        match.range_error_m = m.at("range_error_m").get<double>();
        match.real_angle_deg = m.at("real_angle_deg").get<double>();
        match.est_angle_deg = m.at("est_angle_deg").get<double>();
        match.angle_error_deg = m.at("angle_error_deg").get<double>();
        report.matches.push_back(match);
    }
    if (j.contains("timings_ms")) {
        report.timings.stage1_ms = j["timings_ms"].at("stage1").get<double>();
        report.timings.stage2_ms = j["timings_ms"].at("stage2").get<double>();
        report.timings.total_ms = j["timings_ms"].at("total").get<double>();
    }
    return report;
}

nlohmann::json summary_to_json(const ExperimentSummary& summary) {
    json per_target = json::array();
    for (const TargetStats& t : summary.per_target) {
        per_target.push_back({
            {"target_id", t.target_id},
            {"cluster", t.cluster},
            {"real_range_m", t.real_range_m},
            {"real_angle_deg", t.real_angle_deg},
            {"n_matched", t.n_matched},
            {"median_range_error_m", t.median_range_error_m},
            {"mean_range_error_m", t.mean_range_error_m},
            {"max_range_error_m", t.max_range_error_m},
            {"median_angle_error_deg", t.median_angle_error_deg},
            {"mean_angle_error_deg", t.mean_angle_error_deg},
            {"max_angle_error_deg", t.max_angle_error_deg},
            {"median_est_range_m", t.median_est_range_m},
            {"median_est_angle_deg", t.median_est_angle_deg},
        });
    }
    json per_cluster = json::array();
    for (const ClusterStats& c : summary.per_cluster) {
        per_cluster.push_back({
            {"cluster", c.cluster},
            {"n_truth", c.n_truth},
            {"n_matches", c.n_matches},
            {"flagged_unidentifiable", c.flagged_unidentifiable},
            {"median_range_error_m", c.median_range_error_m},
            {"median_angle_error_deg", c.median_angle_error_deg},
        });
    }
    return json{
        {"schema_version", 1},
        {"kind", "experiment_summary"},
        {"scenario_id", summary.scenario_id},
        {"n_trials", summary.n_trials},
        {"n_failed", summary.n_failed},
        {"true_support", summary.true_support},
        {"support_recovery_rate", summary.support_recovery_rate},
        {"per_target", per_target},
        {"per_cluster", per_cluster},
    };
}

namespace {

std::string format_number(double value) {
    if (std::isnan(value)) return "n/a";
    std::ostringstream out;
    out << std::setprecision(17) << value;
    return out.str();
}

std::string format_fixed(double value, int digits) {
    if (std::isnan(value)) return "n/a";
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << value;
    return out.str();
}

}  // namespace

std::string trial_to_csv(const TrialReport& report) {
    std::ostringstream out;
    out << "Target,Cluster,RealRange_m,EstRange_m,RangeErr_m,RealAngle_deg,EstAngle_deg,AngleErr_deg\n";
    for (const TargetMatch& m : report.matches) {
        out << m.target_id << ',' << m.cluster << ',' << format_number(m.real_range_m) << ','
            << format_number(m.est_range_m) << ',' << format_number(m.range_error_m) << ','
            << format_number(m.real_angle_deg) << ',' << format_number(m.est_angle_deg) << ','
            << format_number(m.angle_error_deg) << '\n';
    }
    return out.str();
}

std::string range_table_csv(const ExperimentSummary& summary) {
    std::ostringstream out;
    out << "Target,RealRange_m,Est_m,Err_m\n";
    for (const TargetStats& t : summary.per_target) {
        out << t.target_id << ',' << format_number(t.real_range_m) << ','
            << format_number(t.median_est_range_m) << ',' << format_number(t.median_range_error_m)
            << '\n';
    }
    return out.str();
}

std::string angle_table_csv(const ExperimentSummary& summary) {
    std::ostringstream out;
    out << "Target,RealAngle_deg,Est_deg,Err_deg\n";
    for (const TargetStats& t : summary.per_target) {
        out << t.target_id << ',' << format_number(t.real_angle_deg) << ','
            << format_number(t.median_est_angle_deg) << ',' << format_number(t.median_angle_error_deg)
            << '\n';
    }
    return out.str();
}

std::string render_tables(const std::vector<TableSet>& tables) {
    if (tables.empty()) return "";
    const auto& targets = tables.front().summary.per_target;
    std::ostringstream out;

    auto row = [&](const std::string& label, auto value_of) {
        out << std::left << std::setw(22) << label;
        for (std::size_t i = 0; i < targets.size(); ++i) out << std::setw(12) << value_of(i);
        out << '\n';
    };

    out << "Range estimation (median across trials)\n";
    row("Target", [&](std::size_t i) { return std::to_string(targets[i].target_id); });
    row("Real range (m)", [&](std::size_t i) { return format_fixed(targets[i].real_range_m, 3); });
    for (const TableSet& set : tables) {
        row("Est (m), M=" + std::to_string(set.m),
            [&](std::size_t i) { return format_fixed(set.summary.per_target[i].median_est_range_m, 3); });
    }
    out << '\n';
    out << "Angle estimation (median across trials)\n";
    row("Target", [&](std::size_t i) { return std::to_string(targets[i].target_id); });
    row("Real angle (deg)", [&](std::size_t i) { return format_fixed(targets[i].real_angle_deg, 3); });
    for (const TableSet& set : tables) {
        row("Est (deg), M=" + std::to_string(set.m),
            [&](std::size_t i) { return format_fixed(set.summary.per_target[i].median_est_angle_deg, 3); });
    }
    return out.str();
}

void export_trial(const TrialReport& report, const std::string& format, std::ostream& out) {
    if (format == "json")
        out << trial_to_json(report).dump(2) << '\n';
    else if (format == "csv")
        out << trial_to_csv(report);
    else
        throw std::invalid_argument("unknown export format \"" + format + "\"");
}

void export_summary(const ExperimentSummary& summary, const std::string& format, std::ostream& out) {
    if (format == "json")
        out << summary_to_json(summary).dump(2) << '\n';
    else if (format == "csv")
        out << range_table_csv(summary) << '\n' << angle_table_csv(summary);
    else
        throw std::invalid_argument("unknown export format \"" + format + "\"");
}

// --- logging -----------------------------------------------------------------

void set_log_level(LogLevel level) {
    g_log_level.store(static_cast<int>(level));
    g_log_level_initialized.store(true);
}

LogLevel log_level_from_env() {
    const char* env = std::getenv("RADAR_SENSE_LOG");
    if (env == nullptr) return LogLevel::kError;
    const std::string value(env);
    if (value == "debug") return LogLevel::kDebug;
    if (value == "info") return LogLevel::kInfo;
    return LogLevel::kError;
}

void log_message(LogLevel level, const std::string& message) {
    if (!g_log_level_initialized.load()) set_log_level(log_level_from_env());
    if (static_cast<int>(level) > g_log_level.load()) return;
    static const char* names[] = {"error", "info", "debug"};
    std::fprintf(stderr, "[radarsense %s] %s\n", names[static_cast<int>(level)], message.c_str());
}

}  // namespace radarsense
