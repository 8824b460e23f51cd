#ifndef RADARSENSE_STAGE2_HPP
#define RADARSENSE_STAGE2_HPP

#include <span>
#include <vector>

#include "radarsense/channel.hpp"
#include "radarsense/config.hpp"
#include "radarsense/types.hpp"

namespace radarsense {

/// Largest per-cluster target count with a guaranteed unique solution,
/// floor((M_T + M_R - 2) / 2).
int max_identifiable_targets(const RadarConfig& cfg);

/// Collapses one cluster's M_R x M_T channel block onto the virtual array:
/// entry u is the mean of all estimates with tx + rx = u (they are identical
/// for ground-truth channels; averaging reduces estimation noise). Length
/// M_T + M_R - 1.
Eigen::VectorXcd collapse_to_virtual_array(const Eigen::Ref<const Eigen::VectorXcd>& cluster_block,
                                           const RadarConfig& cfg);

/// The angle search grid {delta_theta, 2 delta_theta, ..., theta_max}.
/// Throws std::invalid_argument when delta_theta does not divide theta_max
/// (relative 1e-9).
std::vector<double> angle_grid(const RadarConfig& cfg);

struct FixedAngleSolution {
    Eigen::VectorXcd coefficients;  // complex path coefficients, one per angle
    double residual = 0.0;          // sum of squared equation errors
    bool ill_conditioned = false;   // Gram condition exceeded 1e12; residual is +inf
};

/// Least squares of the virtual-array equations at a fixed angle tuple:
/// minimizes sum_u | sum_i Gamma_i Upsilon_u(theta_i) - h_virtual[u] |^2 via
/// the normal equations. Tuples whose Gram condition number exceeds 1e12
/// (duplicate or aliasing angles) are rejected rather than solved.
FixedAngleSolution solve_fixed_angles(const Eigen::VectorXcd& h_virtual, std::span<const double> angles,
                                      const RadarConfig& cfg);

struct GridSearchResult {
    std::vector<double> angles;     // strictly increasing grid angles
    Eigen::VectorXcd coefficients;
    double residual = 0.0;          // Phi(K): best residual over the grid
};

/// Exhaustive search over all strictly increasing k-tuples of grid angles for
/// the tuple minimizing the fixed-angle residual. Enumeration chunks run on
/// `workers` threads and merge by (residual, lexicographic tuple), so the
/// result does not depend on the worker count. Throws std::runtime_error when
/// every tuple is ill-conditioned.
GridSearchResult grid_search(const Eigen::VectorXcd& h_virtual, int k, const RadarConfig& cfg,
                             int workers = 1);

struct ClusterEstimate {
    int cluster = 0;              // delay-in-samples index l
    int k_star = 0;               // estimated target count
    std::vector<double> angles;   // ascending, exact grid multiples
    std::vector<Complex> coefficients;
    std::vector<double> ranges_m;
    double residual = 0.0;        // Phi(k_star)
    bool identifiable = true;     // false when the array cannot separate even 2 targets
};

struct Stage2Options {
    double zero_threshold = 0.0;  // cluster norms at or below this mean "no targets"
    double order_penalty = 0.0;   // optional Phi(K) + penalty * K selection
    int workers = 1;
};

/// Per-cluster enumeration and localization: searches the target count K from
/// 1 up to min(max(K_max, 2), M_T + M_R - 2) (never below 1), picks the
/// residual-minimizing order, and inverts the winning coefficients into
/// ranges. A block at or below zero_threshold yields k_star = 0. Arrays that
/// cannot separate even two targets per cluster flag the estimate
/// identifiable = false.
ClusterEstimate estimate_cluster(const Eigen::Ref<const Eigen::VectorXcd>& cluster_block, int cluster,
                                 const RadarConfig& cfg, const Stage2Options& opts = {});

/// Range from a complex path coefficient, (mu^2 sigma_RCS / (64 pi^3 |g|^2))^(1/4);
/// only the magnitude matters. Throws std::domain_error for g = 0.
double range_from_coefficient(Complex coefficient, const RadarConfig& cfg);

}  // namespace radarsense

#endif  // RADARSENSE_STAGE2_HPP
