#pragma once

// Unscaled stationary isotropic covariance kernels, written as functions of
// distance, together with their inverse ("reverting") maps.

#include <stdexcept>
#include <string>
#include <string_view>

namespace revert {

enum class KernelKind { SquaredExponential, RationalQuadratic, Matern32 };

std::string_view to_string(KernelKind kind) noexcept;
// Accepts "se", "rq", "matern" (and the long names); throws std::invalid_argument.
KernelKind parse_kernel_kind(std::string_view text);

struct KernelModel {
    KernelKind kind = KernelKind::RationalQuadratic;
    double lengthscale = 0.06;
    double rq_alpha = 100.0;  // shape, RQ only

    // Throws std::invalid_argument on non-positive lengthscale or alpha.
    void validate() const;
};

// Raised when a latent value cannot be mapped back to a distance because it
// is not strictly positive (far-field underflow or a negative posterior mean).
class FieldNotPositive : public std::domain_error {
public:
    FieldNotPositive() : std::domain_error("field-not-positive") {}
};

// kappa(d). Exactly 1 at d = 0. Underflows to 0 far from the origin.
double kernel_eval(const KernelModel& k, double d);

// log kappa(d), finite for every finite d >= 0.
double log_kernel_eval(const KernelModel& k, double d);

// d kappa / d d.
double kernel_derivative(const KernelModel& k, double d);

// kappa'(d) / d, continuous at d = 0. Spatial gradients of k(x, x_i) are
// this factor times (x - x_i).
double kernel_radial_factor(const KernelModel& k, double d);

// Variance of each gradient component under the prior: -kappa''(0).
double kernel_gradient_prior_variance(const KernelModel& k);

// Inverse of kernel_eval on (0, 1]. reverting(k, 1) == 0 exactly.
// Throws FieldNotPositive for o <= 0 and std::invalid_argument for o > 1 or NaN.
double reverting(const KernelModel& k, double o);

}  // namespace revert
