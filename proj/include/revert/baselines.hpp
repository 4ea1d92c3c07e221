#pragma once

// Reference distance fields: smooth minimum over the raw samples, LogGPIS on
// a Matern 3/2 latent field, and the exact field of an axis-aligned rectangle.

#include <Eigen/Core>

#include "revert/distance.hpp"
#include "revert/gp_field.hpp"
#include "revert/point_cloud.hpp"

namespace revert {

struct SmoothMinParams {
    double lambda = -50.0;  // must be negative
};

// sum_i d_i exp(lambda d_i) / sum_i exp(lambda d_i), evaluated with a shift by
// the minimum distance. Throws std::invalid_argument on an empty cloud or
// lambda >= 0.
double smooth_min(const PointCloud& cloud, std::span<const double> x, double lambda);
inline double smooth_min(const PointCloud& cloud, const Eigen::VectorXd& x, double lambda) {
    return smooth_min(cloud, std::span<const double>(x.data(), x.size()), lambda);
}

class LogGpisModel {
public:
    // The wrapped model must use the Matern 3/2 kernel.
    explicit LogGpisModel(LatentFieldModel model);
    static LogGpisModel build(PointCloud cloud, double lengthscale, double sigma_n);

    [[nodiscard]] const LatentFieldModel& latent() const noexcept { return model_; }

private:
    LatentFieldModel model_;
};

// -(l / sqrt 3) log o_hat. Latent values above one are capped; values that are
// not strictly positive give FieldStatus::FieldNotPositive.
FieldQuery loggpis_distance(const LogGpisModel& model, std::span<const double> x);
inline FieldQuery loggpis_distance(const LogGpisModel& model, const Eigen::VectorXd& x) {
    return loggpis_distance(model, std::span<const double>(x.data(), x.size()));
}

struct Rectangle {
    double width = 0.6;
    double height = 0.45;
};

// Unsigned distance from x to the boundary of [0, W] x [0, H].
double rect_distance(const Rectangle& rect, const Eigen::Vector2d& x);

}  // namespace revert
