#include "radarsense/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <Eigen/SVD>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace radarsense {

namespace {

struct GroupLayout {
    int n_groups = 0;
    int group_size = 0;

    Eigen::Index start(int g) const { return static_cast<Eigen::Index>(g) * group_size; }
};

GroupLayout layout_for(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& theta, const RadarConfig& cfg) {
    GroupLayout layout;
    layout.n_groups = cfg.max_delay_samples();
    layout.group_size = cfg.n_tx_antennas * cfg.n_rx_antennas;
    if (theta.cols() != static_cast<Eigen::Index>(layout.n_groups) * layout.group_size)
        throw std::invalid_argument("measurement matrix columns do not match L_max * M_T * M_R");
    if (theta.rows() != y.size())
        throw std::invalid_argument("measurement matrix rows do not match the pilot vector");
    return layout;
}

double objective_value(const Eigen::VectorXcd& residual, const Eigen::VectorXcd& h, double rho,
                       const GroupLayout& layout) {
    double penalty = 0.0;
    for (int g = 0; g < layout.n_groups; ++g)
        penalty += h.segment(layout.start(g), layout.group_size).norm();
    return 0.5 * residual.squaredNorm() + rho * penalty;
}

/// Largest eigenvalue of a Hermitian PSD Gram block, 50 power iterations from
/// the all-ones direction.
double spectral_bound(const Eigen::MatrixXcd& gram) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(gram.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXcd w = gram * v;
        const double norm = w.norm();
        if (norm == 0.0) return std::max(1e-300, gram.real().trace());
        lambda = norm;
        v = w / norm;
    }
    return lambda;
}

}  // namespace

Eigen::VectorXcd group_soft_threshold(const Eigen::VectorXcd& v, double t) {
    if (t < 0.0) throw std::domain_error("group soft threshold requires t >= 0");
    const double norm = v.norm();
    if (norm <= t) return Eigen::VectorXcd::Zero(v.size());
    return (1.0 - t / norm) * v;
}

StageOneResult group_lasso_solve(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                                 const RadarConfig& cfg, const GroupLassoOptions& opts,
                                 const ChannelTensor* warm_start) {
    if (opts.rho < 0.0) throw std::domain_error("penalty weight must be >= 0");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
    if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    const GroupLayout layout = layout_for(y_pilot, theta, cfg);
    const double alpha = std::sqrt(cfg.tx_power_w);  // design matrix is alpha * theta
    const double rho = opts.rho;

    // Per-group curvature: exact prox when the Gram block is a scaled
    // identity, otherwise a proximal-gradient step with the spectral bound.
    std::vector<double> step_curvature(layout.n_groups);
    for (int g = 0; g < layout.n_groups; ++g) {
        const auto block = theta.middleCols(layout.start(g), layout.group_size);
        const Eigen::MatrixXcd gram = alpha * alpha * (block.adjoint() * block);
        const double mean_diag = gram.real().trace() / layout.group_size;
        const double off = (gram - mean_diag * Eigen::MatrixXcd::Identity(gram.rows(), gram.cols()))
                               .cwiseAbs()
                               .maxCoeff();
        if (off <= 1e-9 * std::max(mean_diag, 1e-300)) {
            step_curvature[g] = mean_diag;
        } else {
            step_curvature[g] = spectral_bound(gram) * (1.0 + 1e-9);
        }
        if (!(step_curvature[g] > 0.0))
            throw std::invalid_argument("group " + std::to_string(g + 1) + " has zero columns");
    }

    ChannelTensor h(layout.n_groups, cfg.n_rx_antennas, cfg.n_tx_antennas);
    if (warm_start) {
        if (warm_start->stacked.size() != theta.cols())
            throw std::invalid_argument("warm start size mismatch");
        h = *warm_start;
    }
    Eigen::VectorXcd residual = y_pilot - alpha * (theta * h.stacked);

    std::ofstream trace;
    if (!opts.trace_csv_path.empty()) {
        trace.open(opts.trace_csv_path, std::ios::trunc);
        if (!trace) throw std::runtime_error("cannot open solver trace " + opts.trace_csv_path);
        trace << std::setprecision(17) << "iter,objective,max_group_norm,kkt_residual\n";
    }

    double objective = objective_value(residual, h.stacked, rho, layout);
    double kkt = std::numeric_limits<double>::infinity();
    // Zero-penalty runs have no rho-relative certificate; fall back to the
    // correlation scale of the data.
    const double kkt_target = rho > 0.0 ? opts.kkt_tol * rho
                                        : 1e-9 * std::max(1.0, (theta.adjoint() * y_pilot).norm() * alpha);
    int iter = 0;
    bool converged = false;

    while (iter < opts.max_iters) {
        ++iter;
        for (int g = 0; g < layout.n_groups; ++g) {
            const auto block = theta.middleCols(layout.start(g), layout.group_size);
            auto h_g = h.stacked.segment(layout.start(g), layout.group_size);
            const double c = step_curvature[g];
            const Eigen::VectorXcd v = h_g + (alpha / c) * (block.adjoint() * residual);
            const Eigen::VectorXcd h_new = group_soft_threshold(v, rho / c);
            const Eigen::VectorXcd delta = h_new - h_g;
            if (delta.squaredNorm() > 0.0) {
                residual -= alpha * (block * delta);
                h_g = h_new;
            }
        }
        if (iter % 64 == 0) residual = y_pilot - alpha * (theta * h.stacked);  // kill drift

        const double previous = objective;
        objective = objective_value(residual, h.stacked, rho, layout);
        if (objective > previous * (1.0 + 1e-12) + 1e-300)
            throw std::logic_error("group lasso objective increased across a sweep");

        // Optimality certificate: gradient of the smooth part per group.
        const Eigen::VectorXcd grad = -alpha * (theta.adjoint() * residual);
        kkt = 0.0;
        for (int g = 0; g < layout.n_groups; ++g) {
            const auto grad_g = grad.segment(layout.start(g), layout.group_size);
            const auto h_g = h.stacked.segment(layout.start(g), layout.group_size);
            const double norm = h_g.norm();
            const double violation = norm > 0.0
                                         ? (grad_g + (rho / norm) * h_g).norm()
                                         : std::max(0.0, grad_g.norm() - rho);
            kkt = std::max(kkt, violation);
        }

        if (trace.is_open()) {
            double max_norm = 0.0;
            for (int g = 0; g < layout.n_groups; ++g)
                max_norm = std::max(max_norm, h.stacked.segment(layout.start(g), layout.group_size).norm());
            trace << iter << ',' << objective << ',' << max_norm << ',' << kkt << '\n';
        }

        const double decrease = previous - objective;
        if (decrease <= opts.tol * (1.0 + std::abs(objective)) && kkt <= kkt_target) {
            converged = true;
            break;
        }
    }

    StageOneResult result;
    result.h_hat = std::move(h);
    result.objective = objective;
    result.group_norms.resize(layout.n_groups);
    for (int g = 0; g < layout.n_groups; ++g)
        result.group_norms[g] = result.h_hat.stacked.segment(layout.start(g), layout.group_size).norm();
    result.iterations = iter;
    result.kkt_residual = kkt;
    result.converged = converged;
    result.support = detect_support(result, std::nullopt);
    return result;
}

std::vector<int> detect_support(const StageOneResult& result, std::optional<double> threshold) {
    const double cutoff = threshold.value_or(1e-3 * result.group_norms.maxCoeff());
    std::vector<int> support;
    for (int g = 0; g < result.group_norms.size(); ++g)
        if (result.group_norms[g] > cutoff) support.push_back(g + 1);
    return support;
}

double rho_zero_threshold(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                          const RadarConfig& cfg) {
    const GroupLayout layout = layout_for(y_pilot, theta, cfg);
    const Eigen::VectorXcd corr = std::sqrt(cfg.tx_power_w) * (theta.adjoint() * y_pilot);
    double rho_max = 0.0;
    for (int g = 0; g < layout.n_groups; ++g)
        rho_max = std::max(rho_max, corr.segment(layout.start(g), layout.group_size).norm());
    return rho_max;
}

std::vector<double> default_rho_grid(double rho_max, int n) {
    if (n < 1) throw std::invalid_argument("rho grid needs at least one point");
    if (!(rho_max > 0.0)) return {0.0};
    std::vector<double> grid(n);
    if (n == 1) {
        grid[0] = rho_max;
        return grid;
    }
    const double lo = std::log(1e-3 * rho_max);
    const double hi = std::log(rho_max);
    for (int i = 0; i < n; ++i) grid[i] = std::exp(lo + (hi - lo) * i / (n - 1));
    grid.back() = rho_max;
    return grid;
}

namespace {

struct MinNormRefit {
    ChannelTensor tensor;
    double residual2 = 0.0;
};

/// Minimum-norm least squares restricted to the given clusters, via a
/// truncated SVD so near-dependent column sets (coherent neighboring delays)
/// solve stably instead of blowing up.
MinNormRefit min_norm_refit(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                            std::span<const int> support, const RadarConfig& cfg,
                            const GroupLayout& layout) {
    MinNormRefit out;
    out.tensor = ChannelTensor(layout.n_groups, cfg.n_rx_antennas, cfg.n_tx_antennas);
    if (support.empty()) {
        out.residual2 = y_pilot.squaredNorm();
        return out;
    }
    Eigen::MatrixXcd restricted(theta.rows(), static_cast<Eigen::Index>(support.size()) * layout.group_size);
    for (std::size_t i = 0; i < support.size(); ++i)
        restricted.middleCols(static_cast<Eigen::Index>(i) * layout.group_size, layout.group_size) =
            theta.middleCols(layout.start(support[i] - 1), layout.group_size);

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(restricted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd s_inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k)
        if (s[k] > 1e-12 * s[0]) s_inv[k] = 1.0 / s[k];
    const Eigen::VectorXcd scaled =
        svd.matrixV() * (s_inv.cast<Complex>().asDiagonal() * (svd.matrixU().adjoint() * y_pilot));

    for (std::size_t i = 0; i < support.size(); ++i)
        out.tensor.stacked.segment(layout.start(support[i] - 1), layout.group_size) =
            scaled.segment(static_cast<Eigen::Index>(i) * layout.group_size, layout.group_size) /
            std::sqrt(cfg.tx_power_w);
    out.residual2 = (y_pilot - restricted * scaled).squaredNorm();
    return out;
}

}  // namespace

ChannelTensor refit_support(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                            std::span<const int> support, const RadarConfig& cfg) {
    const GroupLayout layout = layout_for(y_pilot, theta, cfg);
    ChannelTensor h(layout.n_groups, cfg.n_rx_antennas, cfg.n_tx_antennas);
    if (support.empty()) return h;

    const Eigen::Index cols = static_cast<Eigen::Index>(support.size()) * layout.group_size;
    Eigen::MatrixXcd restricted(theta.rows(), cols);
    for (std::size_t i = 0; i < support.size(); ++i) {
        const int l = support[i];
        if (l < 1 || l > layout.n_groups) throw std::invalid_argument("support cluster out of range");
        restricted.middleCols(static_cast<Eigen::Index>(i) * layout.group_size, layout.group_size) =
            theta.middleCols(layout.start(l - 1), layout.group_size);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(restricted);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) {
        // Rebuild group by group to name the clusters that break full rank.
        std::vector<int> offenders;
        Eigen::MatrixXcd grown(theta.rows(), 0);
        for (std::size_t i = 0; i < support.size(); ++i) {
            Eigen::MatrixXcd candidate(theta.rows(), grown.cols() + layout.group_size);
            if (grown.cols() > 0) candidate.leftCols(grown.cols()) = grown;
            candidate.rightCols(layout.group_size) =
                theta.middleCols(layout.start(support[i] - 1), layout.group_size);
            Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> step(candidate);
            step.setThreshold(1e-10);
            if (step.rank() < candidate.cols())
                offenders.push_back(support[i]);
            else
                grown = std::move(candidate);
        }
        std::ostringstream msg;
        msg << "support refit is rank deficient; offending clusters:";
        for (int l : offenders) msg << ' ' << l;
        throw std::runtime_error(msg.str());
    }

    const Eigen::VectorXcd solution = qr.solve(y_pilot) / std::sqrt(cfg.tx_power_w);
    for (std::size_t i = 0; i < support.size(); ++i) {
        h.stacked.segment(layout.start(support[i] - 1), layout.group_size) =
            solution.segment(static_cast<Eigen::Index>(i) * layout.group_size, layout.group_size);
    }
    return h;
}

RhoSweepResult rho_sweep(const Eigen::VectorXcd& y_pilot, const Eigen::MatrixXcd& theta,
                         const RadarConfig& cfg, std::span<const double> rho_grid,
                         const GroupLassoOptions& base_opts, bool warm_start, double refit_factor) {
    if (rho_grid.empty()) throw std::invalid_argument("empty rho grid");
    if (!std::is_sorted(rho_grid.begin(), rho_grid.end()))
        throw std::invalid_argument("rho grid must be ascending");

    const GroupLayout layout = layout_for(y_pilot, theta, cfg);
    constexpr double kGuardFactor = 5.0;       // multiple of the expected noise share an added cluster must beat
    constexpr double kExplainedFloor = 1e-24;  // stop once the data is explained to ~machine precision
    RhoSweepResult sweep;
    sweep.path.resize(rho_grid.size());
    const double y_energy = y_pilot.squaredNorm();

    // Consolidation of one path point. Contiguous pilots make neighboring
    // delay columns strongly coherent, so the penalized solution smears an
    // occupied cluster into its neighbors. The debiasing refit is therefore
    // grown greedily over the clusters the solver proposed: a cluster enters
    // only if it explains a material fraction of the remaining residual, and
    // a genuinely occupied cluster always beats the neighbors that merely
    // approximate it.
    auto consolidate = [&](RhoPathPoint& point) {
        const std::vector<int>& candidates = point.result.support;
        std::vector<int> chosen;
        MinNormRefit current = min_norm_refit(y_pilot, theta, chosen, cfg, layout);
        while (chosen.size() < candidates.size() && current.residual2 > kExplainedFloor * y_energy) {
            int best_cluster = 0;
            MinNormRefit best;
            best.residual2 = std::numeric_limits<double>::infinity();
            for (int candidate : candidates) {
                if (std::find(chosen.begin(), chosen.end(), candidate) != chosen.end()) continue;
                std::vector<int> trial = chosen;
                trial.insert(std::upper_bound(trial.begin(), trial.end(), candidate), candidate);
                MinNormRefit refit = min_norm_refit(y_pilot, theta, trial, cfg, layout);
                if (refit.residual2 < best.residual2) {
                    best = std::move(refit);
                    best_cluster = candidate;
                }
            }
            // A pure-noise cluster cuts the residual energy by its degrees-of-
            // freedom share; demand several times that.
            const double dof_left = std::max<double>(
                1.0, static_cast<double>(y_pilot.size()) -
                         static_cast<double>(chosen.size() + 1) * layout.group_size);
            const double required =
                std::min(0.9, kGuardFactor * layout.group_size / dof_left);
            if (best_cluster == 0 || best.residual2 > (1.0 - required) * current.residual2) break;
            chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), best_cluster), best_cluster);
            current = std::move(best);
        }
        point.support = std::move(chosen);
        point.refit = std::move(current.tensor);
        point.refit_residual = std::sqrt(current.residual2);
    };

    // Largest penalty first: the near-empty solution is the natural warm start
    // for its smaller neighbor.
    const ChannelTensor* previous = nullptr;
    for (int i = static_cast<int>(rho_grid.size()) - 1; i >= 0; --i) {
        GroupLassoOptions opts = base_opts;
        opts.rho = rho_grid[i];
        RhoPathPoint& point = sweep.path[i];
        point.rho = rho_grid[i];
        point.result = group_lasso_solve(y_pilot, theta, cfg, opts, warm_start ? previous : nullptr);
        consolidate(point);
        if (warm_start) previous = &point.result.h_hat;
    }

    // Among the points that explain the data nearly as well as the best one,
    // prefer the fewest clusters, then the smallest residual, then the
    // largest penalty.
    double best_residual = std::numeric_limits<double>::infinity();
    for (const auto& point : sweep.path) best_residual = std::min(best_residual, point.refit_residual);
    for (int i = static_cast<int>(sweep.path.size()) - 1; i >= 0; --i) {
        const RhoPathPoint& point = sweep.path[i];
        if (point.refit_residual > refit_factor * best_residual) continue;
        if (sweep.selected_index < 0) {
            sweep.selected_index = i;
            continue;
        }
        const RhoPathPoint& incumbent = sweep.path[sweep.selected_index];
        if (point.support.size() != incumbent.support.size()) {
            if (point.support.size() < incumbent.support.size()) sweep.selected_index = i;
        } else if (point.refit_residual < incumbent.refit_residual) {
            sweep.selected_index = i;
        }
    }
    return sweep;
}

}  // namespace radarsense
