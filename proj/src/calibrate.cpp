#include "revert/calibrate.hpp"

#include <cmath>
#include <stdexcept>

#include "revert/gp_field.hpp"

namespace revert {

namespace {

Eigen::MatrixXd cross_kernel(const PointCloud& a, const PointCloud& b, const KernelModel& k) {
    Eigen::MatrixXd out(a.size(), b.size());
    std::vector<double> d2(a.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        const Eigen::VectorXd q = b.point(j);
        simd::squared_distances(a.planar(), std::span<const double>(q.data(), q.size()), d2);
        for (std::size_t i = 0; i < a.size(); ++i) out(i, j) = kernel_eval(k, std::sqrt(d2[i]));
    }
    return out;
}

double diagonal_mahalanobis(const Eigen::VectorXd& r, const Eigen::VectorXd& var) {
    const double scale = var.mean();
    double jitter = 0.0;
    if (var.minCoeff() <= 0.0) {
        jitter = 1e-12 * scale;
        while (var.minCoeff() + jitter <= 0.0) {
            if (jitter * 10.0 > 1e-6 * scale * (1.0 + 1e-9)) throw GramNotPositiveDefinite(jitter);
            jitter *= 10.0;
        }
    }
    return (r.array().square() / (var.array() + jitter)).sum();
}

}  // namespace

double mahalanobis_objective(const PointCloud& cloud, const KernelModel& kernel,
                             const PointCloud& grid, const std::vector<double>& targets,
                             double sigma_n, std::size_t full_covariance_limit) {
    if (grid.size() != targets.size() || grid.empty()) {
        throw std::invalid_argument("calibration grid and ground truth must be non-empty and match");
    }
    if (grid.dim() != cloud.dim()) throw std::invalid_argument("calibration grid dimension");
    const auto model = LatentFieldModel::build(cloud, kernel, sigma_n);
    const Eigen::MatrixXd k_xs = cross_kernel(cloud, grid, kernel);
    const Eigen::VectorXd o_hat = k_xs.transpose() * model.weights();
    const Eigen::MatrixXd v = model.factorization().matrixL().solve(k_xs);

    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) r[i] = targets[i] - o_hat[i];

    if (grid.size() > full_covariance_limit) {
        const Eigen::VectorXd var =
            Eigen::VectorXd::Ones(m) - v.colwise().squaredNorm().transpose();
        return diagonal_mahalanobis(r, var);
    }
    Eigen::MatrixXd cov = cross_kernel(grid, grid, kernel) - v.transpose() * v;
    cov = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt;
    factorize_with_jitter(cov, llt);
    return llt.matrixL().solve(r).squaredNorm();
}

CalibrationResult learn_sigma_n(const PointCloud& cloud, const KernelModel& kernel,
                                const PointCloud& grid, const std::vector<double>& gt_distances,
                                const CalibrationOptions& options) {
    std::vector<double> targets(gt_distances.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        targets[i] = kernel_eval(kernel, gt_distances[i]);
    }
    return learn_sigma_n_for_targets(cloud, kernel, grid, targets, options);
}

CalibrationResult learn_sigma_n_for_targets(const PointCloud& cloud, const KernelModel& kernel,
                                            const PointCloud& grid,
                                            const std::vector<double>& targets,
                                            const CalibrationOptions& options) {
    if (!(options.lower > 0.0) || !(options.upper > options.lower)) {
        throw std::invalid_argument("calibration bounds must satisfy 0 < lower < upper");
    }
    CalibrationResult result;
    auto objective = [&](double log10_sigma) {
        ++result.evaluations;
        return mahalanobis_objective(cloud, kernel, grid, targets,
                                     std::pow(10.0, log10_sigma), options.full_covariance_limit);
    };

    double a = std::log10(options.lower);
    double b = std::log10(options.upper);
    result.objective_at_lower = objective(a);
    result.objective_at_upper = objective(b);
    if (!std::isfinite(result.objective_at_lower) || !std::isfinite(result.objective_at_upper)) {
        throw std::runtime_error("calibration objective is not finite at the search bounds");
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > options.tolerance_log10) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    // The interior bracket can miss a minimum sitting on a bound.
    double best_log = fc <= fd ? c : d;
    double best = std::min(fc, fd);
    if (result.objective_at_lower < best) {
        best = result.objective_at_lower;
        best_log = std::log10(options.lower);
    }
    if (result.objective_at_upper < best) {
        best = result.objective_at_upper;
        best_log = std::log10(options.upper);
    }
    result.sigma_n = std::pow(10.0, best_log);
    result.objective = best;
    return result;
}

}  // namespace revert
