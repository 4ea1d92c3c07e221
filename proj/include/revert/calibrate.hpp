#pragma once

// Learning the corrective noise term by matching the GP posterior on a
// calibration scene to the ideal latent field kappa(true distance).

#include <vector>

#include "revert/kernels.hpp"
#include "revert/point_cloud.hpp"

namespace revert {

struct CalibrationOptions {
    double lower = 1e-6;
    double upper = 1.0;
    double tolerance_log10 = 1e-3;
    // Grids up to this size use the full posterior covariance, larger ones its diagonal.
    std::size_t full_covariance_limit = 2000;
};

struct CalibrationResult {
    double sigma_n = 0.0;
    double objective = 0.0;
    double objective_at_lower = 0.0;
    double objective_at_upper = 0.0;
    int evaluations = 0;
};

// (o_q - o_hat)^T Sigma^-1 (o_q - o_hat) with (o_hat, Sigma) the posterior
// over the grid for a model with this sigma_n and o_q the ideal latent values.
double mahalanobis_objective(const PointCloud& cloud, const KernelModel& kernel,
                             const PointCloud& grid, const std::vector<double>& targets,
                             double sigma_n, std::size_t full_covariance_limit = 2000);

// Golden-section search on log10 sigma_n against explicit latent targets.
CalibrationResult learn_sigma_n_for_targets(const PointCloud& cloud, const KernelModel& kernel,
                                            const PointCloud& grid,
                                            const std::vector<double>& targets,
                                            const CalibrationOptions& options = {});

// Calibration against o_q = kappa(gt_distances). Throws std::invalid_argument on
// mismatched inputs and std::runtime_error when the objective is not finite at
// either bound.
CalibrationResult learn_sigma_n(const PointCloud& cloud, const KernelModel& kernel,
                                const PointCloud& grid, const std::vector<double>& gt_distances,
                                const CalibrationOptions& options = {});

}  // namespace revert
