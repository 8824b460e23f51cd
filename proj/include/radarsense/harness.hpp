#ifndef RADARSENSE_HARNESS_HPP
#define RADARSENSE_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "radarsense/scenario_io.hpp"
#include "radarsense/stage1.hpp"
#include "radarsense/stage2.hpp"

namespace radarsense {

struct TrialOptions {
    bool noiseless = false;
    std::optional<double> fixed_rho;  // single Stage-I solve instead of the penalty sweep
    int rho_grid_points = 12;
    GroupLassoOptions solver;         // rho is overwritten per sweep point
    Stage2Options stage2;
};

struct StageTimings {
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    double total_ms = 0.0;
};

/// One estimate paired with one ground-truth target of the same cluster.
struct TargetMatch {
    int target_id = 0;
    int cluster = 0;
    int estimate_index = 0;      // index into the cluster's estimate lists
    double real_range_m = 0.0;
    double est_range_m = 0.0;
    double range_error_m = 0.0;
    double real_angle_deg = 0.0;
    double est_angle_deg = 0.0;
    double angle_error_deg = 0.0;
};

struct TrialReport {
    std::uint64_t seed = 0;
    std::string scenario_id;
    bool noiseless = false;
    bool failed = false;
    std::string error;

    double selected_rho = 0.0;
    std::vector<int> support;
    Eigen::VectorXd group_norms;
    double kkt_residual = 0.0;
    bool stage1_converged = false;

    std::vector<ClusterEstimate> estimates;  // one per detected cluster
    std::vector<TargetMatch> matches;
    StageTimings timings;
};

/// Full two-stage pipeline on one noise realization: synthesize, estimate the
/// block-sparse channels, localize each detected cluster, and pair estimates
/// with ground truth by minimum-cost assignment (angle error in degrees plus
/// 0.1 * range error / range resolution). Any module failure is recorded in
/// the report rather than thrown.
TrialReport run_trial(const Scenario& scenario, std::uint64_t seed, const TrialOptions& opts = {});

struct TargetStats {
    int target_id = 0;
    int cluster = 0;
    double real_range_m = 0.0;
    double real_angle_deg = 0.0;
    int n_matched = 0;
    double median_range_error_m = 0.0;
    double mean_range_error_m = 0.0;
    double max_range_error_m = 0.0;
    double median_angle_error_deg = 0.0;
    double mean_angle_error_deg = 0.0;
    double max_angle_error_deg = 0.0;
    double median_est_range_m = 0.0;
    double median_est_angle_deg = 0.0;
};

struct ClusterStats {
    int cluster = 0;
    int n_truth = 0;
    int n_matches = 0;
    bool flagged_unidentifiable = false;  // any trial reported identifiable = false
    double median_range_error_m = 0.0;    // pooled over matches of this cluster
    double median_angle_error_deg = 0.0;
};

struct ExperimentSummary {
    std::string scenario_id;
    int n_trials = 0;
    int n_failed = 0;
    std::vector<int> true_support;
    double support_recovery_rate = 0.0;  // trials whose detected support is exactly the truth
    std::vector<TargetStats> per_target;
    std::vector<ClusterStats> per_cluster;
};

/// Runs one trial per seed (round-robin across `workers` threads) and
/// aggregates. Failed trials are counted and excluded from the statistics.
/// The result depends only on the scenario, options, and seed list.
ExperimentSummary run_monte_carlo(const Scenario& scenario, std::span<const std::uint64_t> seeds,
                                  const TrialOptions& opts = {}, int workers = 1);

/// The four-target reference scene (two targets in cluster 3, two in cluster
/// 9) with M_T = M_R = m antennas.
Scenario benchmark_scenario(int m);

struct TableSet {
    int m = 0;
    ExperimentSummary summary;
};

/// Reruns the reference experiment for each antenna count and collects the
/// range/angle summary tables.
std::vector<TableSet> reproduce_tables(std::span<const int> m_values, std::span<const std::uint64_t> seeds,
                                       const TrialOptions& opts = {}, int workers = 1);

// --- serialization ----------------------------------------------------------

/// Canonical JSON of a trial. Timing is wall-clock noise, so the canonical
/// form used for byte-identity checks excludes it.
nlohmann::json trial_to_json(const TrialReport& report, bool include_timings = true);
TrialReport trial_from_json(const nlohmann::json& j);

nlohmann::json summary_to_json(const ExperimentSummary& summary);

/// Matched-pair table of one trial:
/// Target,Cluster,RealRange_m,EstRange_m,RangeErr_m,RealAngle_deg,EstAngle_deg,AngleErr_deg
std::string trial_to_csv(const TrialReport& report);

/// Range table in the reference layout: Target,RealRange_m,Est_m,Err_m
/// (median estimate and median absolute error across trials).
std::string range_table_csv(const ExperimentSummary& summary);

/// Angle table: Target,RealAngle_deg,Est_deg,Err_deg
std::string angle_table_csv(const ExperimentSummary& summary);

/// Side-by-side text rendering of the range and angle tables for a set of
/// antenna counts, one row per m.
std::string render_tables(const std::vector<TableSet>& tables);

/// Writes a report or summary in the requested format ("json" or "csv").
void export_trial(const TrialReport& report, const std::string& format, std::ostream& out);
void export_summary(const ExperimentSummary& summary, const std::string& format, std::ostream& out);

// --- logging ----------------------------------------------------------------

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Process-wide log threshold, initialized from RADAR_SENSE_LOG
/// (error | info | debug, default error). Messages go to stderr.
void set_log_level(LogLevel level);
LogLevel log_level_from_env();
void log_message(LogLevel level, const std::string& message);

}  // namespace radarsense

#endif  // RADARSENSE_HARNESS_HPP
