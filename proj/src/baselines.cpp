#include "revert/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace revert {

double smooth_min(const PointCloud& cloud, std::span<const double> x, double lambda) {
    if (cloud.empty()) throw std::invalid_argument("smooth minimum of an empty cloud");
    if (!(lambda < 0.0)) throw std::invalid_argument("smooth minimum needs lambda < 0");
    thread_local std::vector<double> d;
    d.resize(cloud.size());
    simd::squared_distances(cloud.planar(), x, d);
    double d_min = d[0];
    for (double& v : d) {
        v = std::sqrt(v);
        d_min = std::min(d_min, v);
    }
    double num = 0.0;
    double den = 0.0;
    for (const double v : d) {
        const double w = std::exp(lambda * (v - d_min));
        num += v * w;
        den += w;
    }
    return num / den;
}

LogGpisModel::LogGpisModel(LatentFieldModel model) : model_(std::move(model)) {
    if (model_.kernel().kind != KernelKind::Matern32) {
        throw std::invalid_argument("LogGPIS requires a Matern 3/2 latent field");
    }
}

LogGpisModel LogGpisModel::build(PointCloud cloud, double lengthscale, double sigma_n) {
    KernelModel k;
    k.kind = KernelKind::Matern32;
    k.lengthscale = lengthscale;
    return LogGpisModel(LatentFieldModel::build(std::move(cloud), k, sigma_n));
}

FieldQuery loggpis_distance(const LogGpisModel& model, std::span<const double> x) {
    FieldQuery q;
    q.o_hat = model.latent().latent_mean(x);
    if (!(q.o_hat > 0.0)) {
        q.status = FieldStatus::FieldNotPositive;
        return q;
    }
    const double l = model.latent().kernel().lengthscale;
    if (q.o_hat >= 1.0) {
        q.status = q.o_hat > 1.0 ? FieldStatus::CappedAtSurface : FieldStatus::Ok;
        q.d_hat = 0.0;
        return q;
    }
    q.status = FieldStatus::Ok;
    q.d_hat = -(l / std::sqrt(3.0)) * std::log(q.o_hat);
    return q;
}

double rect_distance(const Rectangle& rect, const Eigen::Vector2d& x) {
    const double w = rect.width;
    const double h = rect.height;
    const bool inside = x.x() >= 0.0 && x.x() <= w && x.y() >= 0.0 && x.y() <= h;
    if (inside) return std::min({x.x(), w - x.x(), x.y(), h - x.y()});
    const double dx = std::max({0.0, -x.x(), x.x() - w});
    const double dy = std::max({0.0, -x.y(), x.y() - h});
    return std::hypot(dx, dy);
}

}  // namespace revert
