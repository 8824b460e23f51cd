#ifndef RADARSENSE_STAGE1_HPP
#define RADARSENSE_STAGE1_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radarsense/channel.hpp"
#include "radarsense/config.hpp"
#include "radarsense/types.hpp"

namespace radarsense {

struct GroupLassoOptions {
    double rho = 0.0;              // group-norm penalty weight, >= 0
    int max_iters = 5000;          // full block sweeps
    double tol = 1e-12;            // relative objective-decrease stop
    double kkt_tol = 1e-6;         // optimality certificate target, relative to rho
    double support_threshold_rel = 1e-3;  // detect_support default cutoff
    std::string trace_csv_path;    // per-iteration trace when nonempty
};

struct StageOneResult {
    ChannelTensor h_hat;
    double objective = 0.0;             // final penalized least-squares value
    Eigen::VectorXd group_norms;        // per-cluster l2 norms of h_hat
    std::vector<int> support;           // clusters above the detection cutoff
    int iterations = 0;
    double kkt_residual = 0.0;          // max group violation of the optimality conditions
    bool converged = false;
};

/// Proximal operator of t * ||.||_2: zero when ||v|| <= t, else v shrunk by t.
Eigen::VectorXcd group_soft_threshold(const Eigen::VectorXcd& v, double t);

/// Solves the block-sparse channel recovery problem
///   minimize 0.5 ||y - sqrt(p) Theta h||^2 + rho * sum_l ||h_l||_2
/// by cyclic block coordinate descent over the L_max cluster groups. Blocks
/// whose columns are orthogonal (always true for the DFT pilot design) are
/// minimized exactly via the group soft threshold; general blocks take one
/// proximal-gradient step per sweep with step 1/L from a power-method
/// estimate. The objective never increases across sweeps. Stops once the
/// relative objective decrease falls below tol and the KKT residual is within
/// kkt_tol * rho, or at max_iters (then converged = false).
StageOneResult group_lasso_solve(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                                 const RadarConfig& cfg, const GroupLassoOptions& opts,
                                 const ChannelTensor* warm_start = nullptr);

/// Clusters whose estimated group norm exceeds the threshold; by default
/// 1e-3 times the largest group norm. An all-zero estimate detects nothing.
std::vector<int> detect_support(const StageOneResult& result, std::optional<double> threshold = std::nullopt);

/// Smallest rho for which the zero solution is optimal:
/// max_l || (sqrt(p) Theta)^H y restricted to group l ||.
double rho_zero_threshold(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                          const RadarConfig& cfg);

/// n logarithmically spaced penalties from 1e-3 * rho_max up to rho_max, ascending.
std::vector<double> default_rho_grid(double rho_max, int n = 12);

/// Unpenalized least squares restricted to the supported clusters, zeros
/// elsewhere. Throws std::runtime_error naming the offending clusters when the
/// restricted system is rank deficient.
ChannelTensor refit_support(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                            std::span<const int> support, const RadarConfig& cfg);

struct RhoPathPoint {
    double rho = 0.0;
    StageOneResult result;
    std::vector<int> support;
    double refit_residual = 0.0;  // ||y - sqrt(p) Theta_S h_S|| after refit
    ChannelTensor refit;
};

struct RhoSweepResult {
    std::vector<RhoPathPoint> path;  // in ascending-rho order
    int selected_index = -1;

    const RhoPathPoint& selected() const { return path.at(selected_index); }
};

/// Solves the path over an ascending penalty grid (computed largest-first with
/// warm starts unless warm_start is false) and selects the largest rho whose
/// support-refit residual stays within refit_factor of the best on the path.
RhoSweepResult rho_sweep(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                         const RadarConfig& cfg, std::span<const double> rho_grid,
                         const GroupLassoOptions& base_opts, bool warm_start = true,
                         double refit_factor = 1.5);

}  // namespace radarsense

#endif  // RADARSENSE_STAGE1_HPP
