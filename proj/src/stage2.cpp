#include "radarsense/stage2.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

namespace radarsense {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr int kFastOrderLimit = 3;  // closed-form eigenvalues and Cholesky

/// Eigenvalue range {min, max} of a Hermitian 2x2.
std::pair<double, double> eig_range_2(double d0, double d1, Complex g01) {
    const double mid = 0.5 * (d0 + d1);
    const double s = std::sqrt(0.25 * (d0 - d1) * (d0 - d1) + std::norm(g01));
    return {mid - s, mid + s};
}

/// Eigenvalue range of a Hermitian 3x3 via the trigonometric cubic formula.
std::pair<double, double> eig_range_3(double d0, double d1, double d2, Complex g01, Complex g02,
                                      Complex g12) {
    const double q = (d0 + d1 + d2) / 3.0;
    const double p1 = std::norm(g01) + std::norm(g02) + std::norm(g12);
    const double p2 =
        (d0 - q) * (d0 - q) + (d1 - q) * (d1 - q) + (d2 - q) * (d2 - q) + 2.0 * p1;
    if (p2 <= 0.0) return {q, q};
    const double p = std::sqrt(p2 / 6.0);
    const double b0 = (d0 - q) / p, b1 = (d1 - q) / p, b2 = (d2 - q) / p;
    const Complex c01 = g01 / p, c02 = g02 / p, c12 = g12 / p;
    const double det = b0 * b1 * b2 - b0 * std::norm(c12) - b1 * std::norm(c02) -
                       b2 * std::norm(c01) + 2.0 * std::real(c01 * c12 * std::conj(c02));
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double lmax = q + 2.0 * p * std::cos(phi);
    const double lmin = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
    return {lmin, lmax};
}

std::pair<double, double> hermitian_eig_range(const Eigen::MatrixXcd& g) {
    switch (g.rows()) {
        case 1:
            return {g(0, 0).real(), g(0, 0).real()};
        case 2:
            return eig_range_2(g(0, 0).real(), g(1, 1).real(), g(0, 1));
        case 3:
            return eig_range_3(g(0, 0).real(), g(1, 1).real(), g(2, 2).real(), g(0, 1), g(0, 2),
                               g(1, 2));
        default: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(g, Eigen::EigenvaluesOnly);
            return {solver.eigenvalues().minCoeff(), solver.eigenvalues().maxCoeff()};
        }
    }
}

bool acceptable_condition(std::pair<double, double> range) {
    const auto [lmin, lmax] = range;
    return lmin > 0.0 && lmax <= kConditionLimit * lmin;
}

/// In-place Cholesky solve of a Hermitian positive-definite system of order
/// <= kFastOrderLimit, on stack storage. gram is row-major upper triangle.
bool cholesky_solve_small(int k, const std::array<Complex, 9>& gram, const std::array<Complex, 3>& rhs,
                          std::array<Complex, 3>& x) {
    std::array<Complex, 9> l{};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j <= i; ++j) {
            Complex sum = std::conj(gram[j * 3 + i]);  // entry (i, j) of the Hermitian matrix
            for (int t = 0; t < j; ++t) sum -= l[i * 3 + t] * std::conj(l[j * 3 + t]);
            if (i == j) {
                const double diag = sum.real();
                if (!(diag > 0.0)) return false;
                l[i * 3 + i] = std::sqrt(diag);
            } else {
                l[i * 3 + j] = sum / l[j * 3 + j].real();
            }
        }
    }
    std::array<Complex, 3> z{};
    for (int i = 0; i < k; ++i) {
        Complex sum = rhs[i];
        for (int t = 0; t < i; ++t) sum -= l[i * 3 + t] * z[t];
        z[i] = sum / l[i * 3 + i].real();
    }
    for (int i = k - 1; i >= 0; --i) {
        Complex sum = z[i];
        for (int t = i + 1; t < k; ++t) sum -= std::conj(l[t * 3 + i]) * x[t];
        x[i] = sum / l[i * 3 + i].real();
    }
    return true;
}

/// Shared per-cluster lookup tables for the tuple scan.
struct ScanTables {
    Eigen::MatrixXcd steering;  // V x G, one steering vector per grid angle
    Eigen::MatrixXcd pair;      // G x G Hermitian: a_i^H a_j
    Eigen::VectorXcd corr;      // G: a_i^H h
    double h_norm2 = 0.0;
};

ScanTables build_tables(const Eigen::VectorXcd& h_virtual, const std::vector<double>& grid,
                        const RadarConfig& cfg) {
    ScanTables tables;
    const int g = static_cast<int>(grid.size());
    tables.steering.resize(cfg.n_virtual_elements(), g);
    for (int i = 0; i < g; ++i) tables.steering.col(i) = steering_vector(grid[i], cfg);
    tables.pair.noalias() = tables.steering.adjoint() * tables.steering;
    tables.corr.noalias() = tables.steering.adjoint() * h_virtual;
    tables.h_norm2 = h_virtual.squaredNorm();
    return tables;
}

struct ScanCandidate {
    double residual = std::numeric_limits<double>::infinity();
    std::vector<int> tuple;

    bool better_than(const ScanCandidate& other) const {
        if (residual != other.residual) return residual < other.residual;
        return !tuple.empty() && (other.tuple.empty() || tuple < other.tuple);
    }
};

/// Residual of one tuple through the precomputed tables, or +inf when the
/// Gram block fails the condition test. k <= kFastOrderLimit.
double evaluate_small(const ScanTables& t, const int* idx, int k, std::array<Complex, 3>& coeffs) {
    std::array<Complex, 9> gram{};
    std::array<Complex, 3> rhs{};
    for (int a = 0; a < k; ++a) {
        rhs[a] = t.corr[idx[a]];
        for (int b = a; b < k; ++b) gram[a * 3 + b] = t.pair(idx[a], idx[b]);
    }
    std::pair<double, double> eig;
    if (k == 1)
        eig = {gram[0].real(), gram[0].real()};
    else if (k == 2)
        eig = eig_range_2(gram[0].real(), gram[4].real(), gram[1]);
    else
        eig = eig_range_3(gram[0].real(), gram[4].real(), gram[8].real(), gram[1], gram[2], gram[5]);
    if (!acceptable_condition(eig)) return std::numeric_limits<double>::infinity();
    if (!cholesky_solve_small(k, gram, rhs, coeffs)) return std::numeric_limits<double>::infinity();
    Complex fit(0.0, 0.0);
    for (int a = 0; a < k; ++a) fit += std::conj(coeffs[a]) * rhs[a];
    return std::max(0.0, t.h_norm2 - fit.real());
}

/// Scans every strictly increasing k-tuple whose first index i satisfies
/// i % stride == offset, keeping the best candidate.
void scan_chunk_small(const ScanTables& t, int k, int offset, int stride, ScanCandidate& best) {
    const int g = static_cast<int>(t.corr.size());
    std::array<Complex, 3> coeffs{};
    int idx[3] = {0, 0, 0};
    for (int i = offset; i <= g - k; i += stride) {
        idx[0] = i;
        if (k == 1) {
            const double res = evaluate_small(t, idx, 1, coeffs);
            if (res < best.residual) best = {res, {i}};
            continue;
        }
        for (int j = i + 1; j < g - (k - 2); ++j) {
            idx[1] = j;
            if (k == 2) {
                const double res = evaluate_small(t, idx, 2, coeffs);
                if (res < best.residual) best = {res, {i, j}};
                continue;
            }
            for (int m = j + 1; m < g; ++m) {
                idx[2] = m;
                const double res = evaluate_small(t, idx, 3, coeffs);
                if (res < best.residual) best = {res, {i, j, m}};
            }
        }
    }
}

/// General-order fallback: same contract as scan_chunk_small without the
/// stack-size cap. Only reachable for k >= 4 (arrays with many antennas).
void scan_chunk_general(const ScanTables& t, int k, int offset, int stride, ScanCandidate& best) {
    const int g = static_cast<int>(t.corr.size());
    Eigen::MatrixXcd gram(k, k);
    Eigen::VectorXcd rhs(k);
    std::vector<int> idx(k);
    for (int first = offset; first <= g - k; first += stride) {
        for (int a = 0; a < k; ++a) idx[a] = first + a;
        while (true) {
            for (int a = 0; a < k; ++a) {
                rhs[a] = t.corr[idx[a]];
                for (int b = 0; b < k; ++b) gram(a, b) = t.pair(idx[a], idx[b]);
            }
            if (acceptable_condition(hermitian_eig_range(gram))) {
                const Eigen::VectorXcd coeffs = gram.llt().solve(rhs);
                const double res =
                    std::max(0.0, t.h_norm2 - std::real(coeffs.dot(rhs)));
                if (res < best.residual ||
                    (res == best.residual && !best.tuple.empty() && idx < best.tuple))
                    best = {res, idx};
            }
            // advance the tail combination while the first index stays fixed
            int pos = k - 1;
            while (pos >= 1 && idx[pos] == g - k + pos) --pos;
            if (pos < 1) break;
            ++idx[pos];
            for (int a = pos + 1; a < k; ++a) idx[a] = idx[a - 1] + 1;
        }
    }
}

}  // namespace

int max_identifiable_targets(const RadarConfig& cfg) { return cfg.max_identifiable_targets(); }

Eigen::VectorXcd collapse_to_virtual_array(const Eigen::Ref<const Eigen::VectorXcd>& cluster_block,
                                           const RadarConfig& cfg) {
    const int mt = cfg.n_tx_antennas;
    const int mr = cfg.n_rx_antennas;
    if (cluster_block.size() != static_cast<Eigen::Index>(mt) * mr)
        throw std::invalid_argument("cluster block must hold M_R * M_T entries");
    Eigen::VectorXcd h = Eigen::VectorXcd::Zero(cfg.n_virtual_elements());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(cfg.n_virtual_elements());
    for (int rx = 0; rx < mr; ++rx) {
        for (int tx = 0; tx < mt; ++tx) {
            h[tx + rx] += cluster_block[static_cast<Eigen::Index>(rx) * mt + tx];
            counts[tx + rx] += 1.0;
        }
    }
    return h.cwiseQuotient(counts.cast<Complex>());
}

std::vector<double> angle_grid(const RadarConfig& cfg) {
    const double step = cfg.angle_grid_step_rad;
    const double ratio = cfg.theta_max_rad / step;
    const long long n = std::llround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("angle grid step must divide theta_max");
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (long long g = 0; g < n; ++g) grid[static_cast<std::size_t>(g)] = static_cast<double>(g + 1) * step;
    return grid;
}

FixedAngleSolution solve_fixed_angles(const Eigen::VectorXcd& h_virtual, std::span<const double> angles,
                                      const RadarConfig& cfg) {
    const int v = cfg.n_virtual_elements();
    const int k = static_cast<int>(angles.size());
    if (h_virtual.size() != v) throw std::invalid_argument("virtual channel must have M_T + M_R - 1 entries");
    if (k < 1 || k > v) throw std::invalid_argument("angle count must lie in [1, M_T + M_R - 1]");

    Eigen::MatrixXcd a(v, k);
    for (int i = 0; i < k; ++i) a.col(i) = steering_vector(angles[i], cfg);
    const Eigen::MatrixXcd gram = a.adjoint() * a;

    FixedAngleSolution sol;
    if (!acceptable_condition(hermitian_eig_range(gram))) {
        sol.coefficients = Eigen::VectorXcd::Zero(k);
        sol.residual = std::numeric_limits<double>::infinity();
        sol.ill_conditioned = true;
        return sol;
    }
    sol.coefficients = gram.llt().solve(a.adjoint() * h_virtual);
    sol.residual = (a * sol.coefficients - h_virtual).squaredNorm();
    return sol;
}

GridSearchResult grid_search(const Eigen::VectorXcd& h_virtual, int k, const RadarConfig& cfg,
                             int workers) {
    if (k < 1) throw std::invalid_argument("target count hypothesis must be >= 1");
    if (h_virtual.size() != cfg.n_virtual_elements())
        throw std::invalid_argument("virtual channel must have M_T + M_R - 1 entries");
    const std::vector<double> grid = angle_grid(cfg);
    const int g = static_cast<int>(grid.size());
    if (k > g) throw std::runtime_error("angle grid has fewer points than the hypothesized targets");

    const ScanTables tables = build_tables(h_virtual, grid, cfg);
    const int n_workers = std::clamp(workers, 1, g);
    std::vector<ScanCandidate> bests(n_workers);
    auto scan = [&](int w) {
        if (k <= kFastOrderLimit)
            scan_chunk_small(tables, k, w, n_workers, bests[w]);
        else
            scan_chunk_general(tables, k, w, n_workers, bests[w]);
    };
    if (n_workers == 1) {
        scan(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(scan, w);
        for (auto& th : pool) th.join();
    }

    ScanCandidate best;
    for (const auto& candidate : bests)
        if (candidate.better_than(best)) best = candidate;
    if (!std::isfinite(best.residual))
        throw std::runtime_error("every angle tuple was ill-conditioned for this cluster");

    GridSearchResult result;
    result.angles.reserve(k);
    for (int i : best.tuple) result.angles.push_back(grid[static_cast<std::size_t>(i)]);

    // Re-derive the winning coefficients through the same kernel, then report
    // the directly evaluated residual (no cancellation near zero).
    Eigen::VectorXcd coeffs(k);
    if (k <= kFastOrderLimit) {
        std::array<Complex, 3> buf{};
        evaluate_small(tables, best.tuple.data(), k, buf);
        for (int i = 0; i < k; ++i) coeffs[i] = buf[static_cast<std::size_t>(i)];
    } else {
        Eigen::MatrixXcd gram(k, k);
        Eigen::VectorXcd rhs(k);
        for (int a = 0; a < k; ++a) {
            rhs[a] = tables.corr[best.tuple[a]];
            for (int b = 0; b < k; ++b) gram(a, b) = tables.pair(best.tuple[a], best.tuple[b]);
        }
        coeffs = gram.llt().solve(rhs);
    }
    Eigen::VectorXcd fit = Eigen::VectorXcd::Zero(cfg.n_virtual_elements());
    for (int i = 0; i < k; ++i) fit += coeffs[i] * tables.steering.col(best.tuple[i]);
    result.coefficients = std::move(coeffs);
    result.residual = (fit - h_virtual).squaredNorm();
    return result;
}

ClusterEstimate estimate_cluster(const Eigen::Ref<const Eigen::VectorXcd>& cluster_block, int cluster,
                                 const RadarConfig& cfg, const Stage2Options& opts) {
    ClusterEstimate estimate;
    estimate.cluster = cluster;
    estimate.identifiable = cfg.max_identifiable_targets() >= 1;
    if (cluster_block.norm() <= opts.zero_threshold) return estimate;

    const Eigen::VectorXcd h_virtual = collapse_to_virtual_array(cluster_block, cfg);
    // Search at least the two-target hypothesis whenever the virtual array can
    // express it; K = V would fit any data exactly, so cap one short of that.
    const int k_eff = std::max(
        1, std::min(std::max(cfg.max_identifiable_targets(), 2), cfg.n_virtual_elements() - 1));
    // Improvements below the round-off floor of the squared data norm do not
    // count, so exact fits resolve toward the smaller model order.
    const double margin = 1e-14 * h_virtual.squaredNorm();

    GridSearchResult best;
    int best_k = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_eff; ++k) {
        GridSearchResult candidate = grid_search(h_virtual, k, cfg, opts.workers);
        const double score = candidate.residual + opts.order_penalty * k;
        if (best_k == 0 || score < best_score - margin) {
            best = std::move(candidate);
            best_k = k;
            best_score = score;
        }
    }

    estimate.k_star = best_k;
    estimate.angles = best.angles;
    estimate.residual = best.residual;
    estimate.coefficients.assign(best.coefficients.data(), best.coefficients.data() + best_k);
    estimate.ranges_m.reserve(best_k);
    for (const Complex& coeff : estimate.coefficients)
        estimate.ranges_m.push_back(range_from_coefficient(coeff, cfg));
    return estimate;
}

double range_from_coefficient(Complex coefficient, const RadarConfig& cfg) {
    const double mag2 = std::norm(coefficient);
    if (!(mag2 > 0.0)) throw std::domain_error("range recovery requires a nonzero path coefficient");
    const double num = cfg.wavelength_m * cfg.wavelength_m * cfg.rcs_m2;
    return std::pow(num / (64.0 * kPi * kPi * kPi * mag2), 0.25);
}

}  // namespace radarsense
