#include "revert/gp_field.hpp"

#include <cmath>
#include <vector>

namespace revert {

double factorize_with_jitter(const Eigen::MatrixXd& matrix, Eigen::LLT<Eigen::MatrixXd>& llt) {
    llt.compute(matrix);
    if (llt.info() == Eigen::Success) return 0.0;
    const double scale = matrix.trace() / static_cast<double>(matrix.rows());
    double jitter = 1e-12 * scale;
    const double max_jitter = 1e-6 * scale * (1.0 + 1e-9);
    Eigen::MatrixXd work = matrix;
    while (true) {
        work.diagonal() = matrix.diagonal().array() + jitter;
        llt.compute(work);
        if (llt.info() == Eigen::Success) return jitter;
        if (jitter * 10.0 > max_jitter) throw GramNotPositiveDefinite(jitter);
        jitter *= 10.0;
    }
}

LatentFieldModel::LatentFieldModel(PointCloud cloud, const KernelModel& kernel, double sigma_n)
    : cloud_(std::move(cloud)), kernel_(kernel), sigma_n_(sigma_n) {}

LatentFieldModel LatentFieldModel::build(PointCloud cloud, const KernelModel& kernel,
                                         double sigma_n) {
    kernel.validate();
    if (cloud.empty()) throw std::invalid_argument("cannot build a latent field from no points");
    if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n)) {
        throw std::invalid_argument("sigma_n must be finite and non-negative");
    }
    LatentFieldModel model(std::move(cloud), kernel, sigma_n);
    const auto q = static_cast<Eigen::Index>(model.cloud_.size());
    const int dim = model.cloud_.dim();
    Eigen::MatrixXd gram(q, q);
    for (Eigen::Index i = 0; i < q; ++i) {
        gram(i, i) = 1.0 + sigma_n * sigma_n;
        for (Eigen::Index j = 0; j < i; ++j) {
            double d2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double diff = model.cloud_.coord(i, a) - model.cloud_.coord(j, a);
                d2 += diff * diff;
            }
            const double k = kernel_eval(kernel, std::sqrt(d2));
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    model.jitter_ = factorize_with_jitter(gram, model.llt_);
    gram.diagonal().array() += model.jitter_;
    model.gram_ = std::move(gram);
    model.weights_ = model.llt_.solve(Eigen::VectorXd::Ones(q));
    return model;
}

double LatentFieldModel::weight_residual() const {
    const auto q = weights_.size();
    return (gram_ * weights_ - Eigen::VectorXd::Ones(q)).norm() / std::sqrt(static_cast<double>(q));
}

void LatentFieldModel::check_query(const Eigen::VectorXd& x) const {
    if (x.size() != cloud_.dim()) throw std::invalid_argument("query dimension mismatch");
    if (!x.allFinite()) throw std::invalid_argument("query must be finite");
}

void LatentFieldModel::kernel_vector(std::span<const double> x, Eigen::VectorXd& out) const {
    const auto q = static_cast<Eigen::Index>(cloud_.size());
    out.resize(q);
    simd::squared_distances(cloud_.planar(), x, std::span<double>(out.data(), out.size()));
    for (Eigen::Index i = 0; i < q; ++i) out[i] = kernel_eval(kernel_, std::sqrt(out[i]));
}

double LatentFieldModel::latent_mean(std::span<const double> x) const {
    thread_local Eigen::VectorXd k;
    kernel_vector(x, k);
    return simd::dot(std::span<const double>(k.data(), k.size()),
                     std::span<const double>(weights_.data(), weights_.size()));
}

LatentQuery LatentFieldModel::infer_latent(const Eigen::VectorXd& x) const {
    check_query(x);
    Eigen::VectorXd k;
    kernel_vector(std::span<const double>(x.data(), x.size()), k);
    LatentQuery out;
    out.o_hat = k.dot(weights_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    out.o_var = std::max(0.0, 1.0 - v.squaredNorm());
    return out;
}

LatentQuery LatentFieldModel::infer_gradient(const Eigen::VectorXd& x) const {
    check_query(x);
    const auto q = static_cast<Eigen::Index>(cloud_.size());
    const int dim = cloud_.dim();
    Eigen::VectorXd d2(q);
    simd::squared_distances(cloud_.planar(), std::span<const double>(x.data(), x.size()),
                            std::span<double>(d2.data(), d2.size()));

    Eigen::VectorXd k(q);
    Eigen::MatrixXd grad_k(q, dim);  // row i: d k(x, x_i) / dx
    for (Eigen::Index i = 0; i < q; ++i) {
        const double r = std::sqrt(d2[i]);
        k[i] = kernel_eval(kernel_, r);
        const double f = kernel_radial_factor(kernel_, r);
        for (int a = 0; a < dim; ++a) grad_k(i, a) = f * (x[a] - cloud_.coord(i, a));
    }

    LatentQuery out;
    out.o_hat = k.dot(weights_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    out.o_var = std::max(0.0, 1.0 - v.squaredNorm());
    out.grad = grad_k.transpose() * weights_;

    const Eigen::MatrixXd w = llt_.matrixL().solve(grad_k);  // Q x dim
    Eigen::MatrixXd cov = kernel_gradient_prior_variance(kernel_) *
                              Eigen::MatrixXd::Identity(dim, dim) -
                          w.transpose() * w;
    out.grad_cov = 0.5 * (cov + cov.transpose());
    return out;
}

}  // namespace revert
