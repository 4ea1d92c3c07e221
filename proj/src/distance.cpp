#include "revert/distance.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "revert/baselines.hpp"

namespace revert {

std::string_view to_string(FieldStatus status) noexcept {
    switch (status) {
        case FieldStatus::Ok: return "ok";
        case FieldStatus::CappedAtSurface: return "capped";
        case FieldStatus::FieldNotPositive: return "nopos";
    }
    return "?";
}

FieldQuery revert_latent(const KernelModel& kernel, double o_hat) {
    FieldQuery q;
    q.o_hat = o_hat;
    if (!(o_hat > 0.0)) {
        q.status = FieldStatus::FieldNotPositive;
        return q;
    }
    if (o_hat > 1.0) {
        q.status = FieldStatus::CappedAtSurface;
        q.d_hat = 0.0;
        return q;
    }
    q.status = FieldStatus::Ok;
    q.d_hat = reverting(kernel, o_hat);
    return q;
}

FieldQuery query_distance_fast(const LatentFieldModel& model, std::span<const double> x) {
    return revert_latent(model.kernel(), model.latent_mean(x));
}

double uncertainty_proxy(const LatentFieldModel& model, const FieldQuery& q,
                         const Eigen::MatrixXd& grad_cov) {
    if (q.status == FieldStatus::FieldNotPositive) {
        throw std::domain_error("uncertainty proxy undefined: field-not-positive");
    }
    constexpr double eps = 1e-12;
    const double g = q.grad.norm();
    const double m = std::abs(kernel_derivative(model.kernel(), q.d_hat));
    double s2 = 0.0;
    if (g < 1e-12) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(grad_cov, Eigen::EigenvaluesOnly);
        s2 = eig.eigenvalues().maxCoeff();
    } else {
        const Eigen::VectorXd u = q.grad / g;
        s2 = u.dot(grad_cov * u);
    }
    const double s = std::sqrt(std::max(s2, 0.0));
    return std::abs(m - g) / std::max(s, eps);
}

FieldQuery query_distance(const LatentFieldModel& model, const Eigen::VectorXd& x) {
    const LatentQuery latent = model.infer_gradient(x);
    FieldQuery q = revert_latent(model.kernel(), latent.o_hat);
    q.grad = latent.grad;
    if (q.valid()) q.uncertainty = uncertainty_proxy(model, q, latent.grad_cov);
    return q;
}

Eigen::VectorXd distance_gradient(const KernelModel& kernel, const FieldQuery& q) {
    const double slope = q.valid() ? kernel_derivative(kernel, q.d_hat) : 0.0;
    if (slope == 0.0) return Eigen::VectorXd::Zero(q.grad.size());
    return q.grad / slope;
}

double fusion_weight(double d_sm, double lengthscale, const FusionParams& params) {
    const double center = params.center_factor * lengthscale;
    const double width = params.width_factor * lengthscale;
    return 1.0 / (1.0 + std::exp((d_sm - center) / width));
}

FieldQuery query_fused(const LatentFieldModel& model, const PointCloud& cloud,
                       std::span<const double> x, const FusionParams& params) {
    FieldQuery gp = query_distance_fast(model, x);
    const double d_sm = smooth_min(cloud, x, params.lambda);
    FieldQuery out = gp;
    if (!gp.valid()) {
        out.d_hat = d_sm;
        out.status = FieldStatus::Ok;
        return out;
    }
    const double w = fusion_weight(d_sm, model.kernel().lengthscale, params);
    out.d_hat = w * gp.d_hat + (1.0 - w) * d_sm;
    return out;
}

}  // namespace revert
