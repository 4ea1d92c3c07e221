#pragma once

// Latent occupancy field: zero-mean GP regression of surface samples that all
// carry the latent value 1, so that the posterior mean approximates
// kappa(distance to surface).

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>

#include "revert/kernels.hpp"
#include "revert/point_cloud.hpp"

namespace revert {

class GramNotPositiveDefinite : public std::runtime_error {
public:
    explicit GramNotPositiveDefinite(double jitter)
        : std::runtime_error("gram-not-pd (final jitter " + std::to_string(jitter) + ")"),
          jitter_(jitter) {}
    [[nodiscard]] double jitter() const noexcept { return jitter_; }

private:
    double jitter_;
};

struct LatentQuery {
    double o_hat = 0.0;
    double o_var = 0.0;
    Eigen::VectorXd grad;      // d o_hat / d x
    Eigen::MatrixXd grad_cov;  // posterior covariance of the gradient
};

// Adds jitter to a symmetric matrix until its Cholesky factorization
// succeeds: 1e-12 * mean diagonal, escalated x10 up to 1e-6 * mean diagonal.
// Returns the jitter used (0 when none was needed). Throws
// GramNotPositiveDefinite when the last attempt fails.
double factorize_with_jitter(const Eigen::MatrixXd& matrix, Eigen::LLT<Eigen::MatrixXd>& llt);

class LatentFieldModel {
public:
    // Throws std::invalid_argument (empty cloud, negative sigma_n, bad kernel)
    // or GramNotPositiveDefinite.
    static LatentFieldModel build(PointCloud cloud, const KernelModel& kernel, double sigma_n);

    [[nodiscard]] const PointCloud& cloud() const noexcept { return cloud_; }
    [[nodiscard]] const KernelModel& kernel() const noexcept { return kernel_; }
    [[nodiscard]] double sigma_n() const noexcept { return sigma_n_; }
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return weights_; }
    [[nodiscard]] Eigen::MatrixXd gram_factor() const { return llt_.matrixL(); }
    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& factorization() const noexcept { return llt_; }
    [[nodiscard]] int dim() const noexcept { return cloud_.dim(); }

    // k(x, X) into out (size Q).
    void kernel_vector(std::span<const double> x, Eigen::VectorXd& out) const;

    // Posterior mean only.
    [[nodiscard]] double latent_mean(std::span<const double> x) const;
    [[nodiscard]] double latent_mean(const Eigen::VectorXd& x) const {
        return latent_mean(std::span<const double>(x.data(), x.size()));
    }

    // Posterior mean and variance.
    [[nodiscard]] LatentQuery infer_latent(const Eigen::VectorXd& x) const;

    // Posterior mean, variance, gradient and gradient covariance.
    [[nodiscard]] LatentQuery infer_gradient(const Eigen::VectorXd& x) const;

    // |(K + s^2 I) w - 1| / |1|
    [[nodiscard]] double weight_residual() const;

private:
    LatentFieldModel(PointCloud cloud, const KernelModel& kernel, double sigma_n);
    void check_query(const Eigen::VectorXd& x) const;

    PointCloud cloud_;
    KernelModel kernel_;
    double sigma_n_ = 0.0;
    double jitter_ = 0.0;
    Eigen::MatrixXd gram_;  // K(X, X) + (sigma_n^2 + jitter) I
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd weights_;
};

}  // namespace revert
