#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "radarsense/harness.hpp"
#include "test_support.hpp"

using namespace radarsense;
using radarsense::testing::small_config;

namespace {

/// A light scenario the full pipeline can run in milliseconds: coarse angle
/// grid, small symbol, two well-separated targets.
Scenario fast_scenario() {
    Scenario scenario;
    scenario.id = "fast";
    scenario.config = small_config(64, 24, 2, 2, 5);
    scenario.config.angle_grid_step_rad = deg_to_rad(3.0);
    scenario.config.tx_power_w = 200.0;  // comfortable SNR at the short symbol
    const auto grid_step = scenario.config.angle_grid_step_rad;
    scenario.targets = {
        {1, 0.45 * scenario.config.d_max_m, 12 * grid_step},
        {2, 0.88 * scenario.config.d_max_m, 25 * grid_step},
    };
    return scenario;
}

}  // namespace

TEST_CASE("scenario files round trip") {
    const Scenario scenario = benchmark_scenario(4);
    const std::string text = scenario_to_json(scenario);
    const Scenario back = parse_scenario(text);
    CHECK(back.id == scenario.id);
    CHECK(back.config.n_tx_antennas == 4);
    CHECK(back.config.d_max_m == scenario.config.d_max_m);
    REQUIRE(back.targets.size() == 4);
    CHECK(back.targets[2].range_m == doctest::Approx(81.611).epsilon(1e-12));
    CHECK(rad_to_deg(back.targets[2].angle_rad) == doctest::Approx(31.903).epsilon(1e-12));

    CHECK_THROWS(parse_scenario("{not json"));
    CHECK_THROWS(parse_scenario(R"({"config": {"bogus_key": 3}})"));
}

TEST_CASE("noiseless trial on grid-snapped targets is exact") {
    const Scenario scenario = fast_scenario();
    TrialOptions opts;
    opts.noiseless = true;
    const TrialReport report = run_trial(scenario, 1, opts);
    REQUIRE_FALSE(report.failed);

    const ClusterMap clusters = build_clusters(scenario.targets, scenario.config);
    CHECK(report.support == clusters.occupied());
    REQUIRE(report.matches.size() == 2);
    for (const TargetMatch& match : report.matches) {
        CHECK(match.angle_error_deg == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(match.range_error_m <= 1e-6);
    }
    CHECK(report.timings.total_ms >=
          0.95 * (report.timings.stage1_ms + report.timings.stage2_ms));
}

TEST_CASE("empty scenarios produce empty reports") {
    Scenario scenario = fast_scenario();
    scenario.targets.clear();
    const TrialReport report = run_trial(scenario, 3, TrialOptions{});
    REQUIRE_FALSE(report.failed);
    CHECK(report.support.empty());
    CHECK(report.estimates.empty());
    CHECK(report.matches.empty());
}

TEST_CASE("trial reports serialize deterministically") {
    const Scenario scenario = fast_scenario();
    TrialOptions opts;
    const TrialReport a = run_trial(scenario, 7, opts);
    const TrialReport b = run_trial(scenario, 7, opts);
    CHECK(trial_to_json(a, false).dump() == trial_to_json(b, false).dump());

    // different seeds change the noise and therefore the bytes
    const TrialReport c = run_trial(scenario, 8, opts);
    CHECK(trial_to_json(a, false).dump() != trial_to_json(c, false).dump());

    // grid-search workers do not affect the outcome
    TrialOptions threaded = opts;
    threaded.stage2.workers = 4;
    const TrialReport d = run_trial(scenario, 7, threaded);
    CHECK(trial_to_json(a, false).dump() == trial_to_json(d, false).dump());
}

TEST_CASE("trial json round trip") {
    const TrialReport report = run_trial(fast_scenario(), 5, TrialOptions{});
    const nlohmann::json j = trial_to_json(report);
    const TrialReport back = trial_from_json(j);
    CHECK(trial_to_json(back).dump() == j.dump());
}

TEST_CASE("trial csv layout") {
    const TrialReport report = run_trial(fast_scenario(), 2, TrialOptions{});
    const std::string csv = trial_to_csv(report);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "Target,Cluster,RealRange_m,EstRange_m,RangeErr_m,RealAngle_deg,EstAngle_deg,AngleErr_deg");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == static_cast<int>(report.matches.size()));
}

TEST_CASE("matching is assignment-optimal") {
    // brute-force re-check of the reported assignment cost on random trials
    const Scenario scenario = fast_scenario();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const TrialReport report = run_trial(scenario, seed, TrialOptions{});
        REQUIRE_FALSE(report.failed);
        const ClusterMap clusters = build_clusters(scenario.targets, scenario.config);
        const double dd = scenario.config.range_resolution_m();
        for (const ClusterEstimate& estimate : report.estimates) {
            const auto& truth = clusters.members(estimate.cluster);
            std::vector<TargetMatch> reported;
            for (const TargetMatch& m : report.matches)
                if (m.cluster == estimate.cluster) reported.push_back(m);
            const int n = std::min<int>(estimate.k_star, static_cast<int>(truth.size()));
            REQUIRE(static_cast<int>(reported.size()) == n);
            double reported_cost = 0.0;
            for (const TargetMatch& m : reported)
                reported_cost += m.angle_error_deg + 0.1 * m.range_error_m / dd;

            // every injective assignment of estimates to truths costs at least as much
            std::vector<int> est_idx(estimate.k_star);
            std::iota(est_idx.begin(), est_idx.end(), 0);
            std::vector<int> truth_idx(truth.size());
            std::iota(truth_idx.begin(), truth_idx.end(), 0);
            auto cost_of = [&](int e, int t) {
                return std::abs(rad_to_deg(estimate.angles[e]) - rad_to_deg(truth[t].angle_rad)) +
                       0.1 * std::abs(estimate.ranges_m[e] - truth[t].range_m) / dd;
            };
            if (estimate.k_star <= static_cast<int>(truth.size())) {
                std::sort(truth_idx.begin(), truth_idx.end());
                do {
                    double cost = 0.0;
                    for (int e = 0; e < n; ++e) cost += cost_of(e, truth_idx[e]);
                    CHECK(reported_cost <= cost + 1e-9);
                } while (std::next_permutation(truth_idx.begin(), truth_idx.end()));
            } else {
                std::sort(est_idx.begin(), est_idx.end());
                do {
                    double cost = 0.0;
                    for (int t = 0; t < n; ++t) cost += cost_of(est_idx[t], t);
                    CHECK(reported_cost <= cost + 1e-9);
                } while (std::next_permutation(est_idx.begin(), est_idx.end()));
            }
        }
    }
}

TEST_CASE("monte carlo aggregation") {
    const Scenario scenario = fast_scenario();
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};

    const ExperimentSummary summary = run_monte_carlo(scenario, seeds, TrialOptions{}, 1);
    CHECK(summary.n_trials == 4);
    CHECK(summary.n_failed == 0);
    REQUIRE(summary.per_target.size() == 2);
    CHECK(summary.true_support == build_clusters(scenario.targets, scenario.config).occupied());

    SUBCASE("single-seed summaries mirror the trial") {
        const std::vector<std::uint64_t> one = {9};
        const ExperimentSummary s = run_monte_carlo(scenario, one, TrialOptions{}, 1);
        const TrialReport trial = run_trial(scenario, 9, TrialOptions{});
        for (const auto& stats : s.per_target) {
            for (const TargetMatch& m : trial.matches) {
                if (m.target_id != stats.target_id) continue;
                CHECK(stats.median_range_error_m == doctest::Approx(m.range_error_m));
                CHECK(stats.median_angle_error_deg == doctest::Approx(m.angle_error_deg));
            }
        }
    }

    SUBCASE("aggregation is deterministic and worker-independent") {
        const ExperimentSummary again = run_monte_carlo(scenario, seeds, TrialOptions{}, 1);
        const ExperimentSummary threaded = run_monte_carlo(scenario, seeds, TrialOptions{}, 3);
        CHECK(summary_to_json(summary).dump() == summary_to_json(again).dump());
        CHECK(summary_to_json(summary).dump() == summary_to_json(threaded).dump());
    }
}

TEST_CASE("summary export formats") {
    const Scenario scenario = fast_scenario();
    const std::vector<std::uint64_t> seeds = {1, 2};
    const ExperimentSummary summary = run_monte_carlo(scenario, seeds, TrialOptions{}, 1);

    std::ostringstream json_out;
    export_summary(summary, "json", json_out);
    const auto parsed = nlohmann::json::parse(json_out.str());
    CHECK(parsed["schema_version"] == 1);
    CHECK(parsed["n_trials"] == 2);

    std::ostringstream csv_out;
    export_summary(summary, "csv", csv_out);
    CHECK(csv_out.str().rfind("Target,RealRange_m,Est_m,Err_m\n", 0) == 0);

    std::ostringstream bad;
    CHECK_THROWS_AS(export_summary(summary, "xml", bad), std::invalid_argument);

    SUBCASE("empty summaries export a schema header and nothing else") {
        const ExperimentSummary empty;
        std::ostringstream out;
        export_summary(empty, "csv", out);
        CHECK(out.str() == "Target,RealRange_m,Est_m,Err_m\n\nTarget,RealAngle_deg,Est_deg,Err_deg\n");
        std::ostringstream j;
        export_summary(empty, "json", j);
        CHECK(nlohmann::json::parse(j.str())["n_trials"] == 0);
    }
}

TEST_CASE("failed trials are recorded, not thrown") {
    Scenario scenario = fast_scenario();
    scenario.targets[0].range_m = -5.0;  // invalid
    const TrialReport report = run_trial(scenario, 1, TrialOptions{});
    CHECK(report.failed);
    CHECK_FALSE(report.error.empty());

    const std::vector<std::uint64_t> seeds = {1, 2};
    const ExperimentSummary summary = run_monte_carlo(scenario, seeds, TrialOptions{}, 1);
    CHECK(summary.n_failed == 2);
}

TEST_CASE("benchmark scenario matches the reference tables") {
    const Scenario scenario = benchmark_scenario(4);
    REQUIRE(scenario.targets.size() == 4);
    CHECK(scenario.targets[0].range_m == 22.765);
    CHECK(scenario.targets[1].range_m == 28.170);
    CHECK(scenario.targets[2].range_m == 81.611);
    CHECK(scenario.targets[3].range_m == 86.623);
    CHECK(scenario.config.n_tx_antennas == 4);
    CHECK(scenario.config.n_rx_antennas == 4);
    const auto report = validate_scenario(scenario.targets, scenario.config);
    CHECK(report.ok());
}
