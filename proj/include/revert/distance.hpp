#pragma once

// Distance field recovered from the latent field through the kernel inverse,
// with capping, failure reporting, an uncertainty proxy and the fused
// GP / smooth-minimum field.

#include <Eigen/Core>

#include <limits>
#include <span>
#include <string_view>

#include "revert/gp_field.hpp"

namespace revert {

enum class FieldStatus { Ok, CappedAtSurface, FieldNotPositive };

// "ok", "capped", "nopos"
std::string_view to_string(FieldStatus status) noexcept;

struct FieldQuery {
    double d_hat = std::numeric_limits<double>::quiet_NaN();  // NaN when FieldNotPositive
    double o_hat = 0.0;                                       // raw latent mean, before capping
    Eigen::VectorXd grad;                                     // latent gradient
    double uncertainty = std::numeric_limits<double>::quiet_NaN();
    FieldStatus status = FieldStatus::FieldNotPositive;

    [[nodiscard]] bool valid() const noexcept { return status != FieldStatus::FieldNotPositive; }
};

// Maps a raw latent value to (distance, status) by capping at one and
// reverting. Used by every reverting-style field.
FieldQuery revert_latent(const KernelModel& kernel, double o_hat);

// Distance, status and latent value only.
FieldQuery query_distance_fast(const LatentFieldModel& model, std::span<const double> x);

// Full query: distance, latent gradient and uncertainty proxy.
FieldQuery query_distance(const LatentFieldModel& model, const Eigen::VectorXd& x);

// Standardized discrepancy between |kappa'(d_hat)| and |grad o_hat|, the
// spread being the gradient covariance projected on the gradient direction.
// Throws std::domain_error when q.status is FieldNotPositive.
double uncertainty_proxy(const LatentFieldModel& model, const FieldQuery& q,
                         const Eigen::MatrixXd& grad_cov);

// Gradient of the distance estimate by the chain rule, grad o / kappa'(d).
// Returns a zero vector when kappa'(d) vanishes.
Eigen::VectorXd distance_gradient(const KernelModel& kernel, const FieldQuery& q);

struct FusionParams {
    double center_factor = 2.0;  // blend center, in lengthscales
    double width_factor = 0.5;   // blend width, in lengthscales
    double lambda = -50.0;       // smooth-minimum sharpness
};

// Logistic weight given to the GP field at smooth-minimum distance d_sm.
double fusion_weight(double d_sm, double lengthscale, const FusionParams& params);

FieldQuery query_fused(const LatentFieldModel& model, const PointCloud& cloud,
                       std::span<const double> x, const FusionParams& params = {});

}  // namespace revert
