#include "doctest.h"

#include <cmath>
#include <random>

#include "revert/baselines.hpp"
#include "revert/distance.hpp"

using namespace revert;

namespace {

Eigen::VectorXd v2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

PointCloud circle(int n, double r, double cx = 0.5, double cy = 0.5) {
    PointCloud c(2);
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * M_PI * i / n;
        c.add(v2(cx + r * std::cos(t), cy + r * std::sin(t)));
    }
    return c;
}

LatentFieldModel single_se() {
    PointCloud c(2);
    c.add(v2(0.0, 0.0));
    return LatentFieldModel::build(c, KernelModel{KernelKind::SquaredExponential, 1.0, 100.0},
                                   0.0);
}

}  // namespace

TEST_CASE("status names") {
    CHECK(to_string(FieldStatus::Ok) == "ok");
    CHECK(to_string(FieldStatus::CappedAtSurface) == "capped");
    CHECK(to_string(FieldStatus::FieldNotPositive) == "nopos");
}

TEST_CASE("single observation distance") {
    const auto m = single_se();
    const auto q = query_distance(m, v2(0.5, 0.0));
    CHECK(q.status == FieldStatus::Ok);
    CHECK(std::abs(q.d_hat - 0.5) <= 1e-9);
    CHECK(q.uncertainty >= 0.0);
    CHECK(q.uncertainty < 1e-6);
    const auto fast = query_distance_fast(m, std::span<const double>(v2(0.5, 0.0).data(), 2));
    CHECK(fast.d_hat == q.d_hat);
}

TEST_CASE("capping and failure statuses") {
    const KernelModel k{KernelKind::RationalQuadratic, 0.06, 100.0};
    const auto capped = revert_latent(k, 1.03);
    CHECK(capped.status == FieldStatus::CappedAtSurface);
    CHECK(capped.d_hat == 0.0);
    CHECK(capped.o_hat == 1.03);
    CHECK(capped.valid());

    const auto bad = revert_latent(k, -1e-3);
    CHECK(bad.status == FieldStatus::FieldNotPositive);
    CHECK(std::isnan(bad.d_hat));
    CHECK_FALSE(bad.valid());

    const auto m = single_se();
    const auto far = query_distance(m, v2(50.0, 0.0));
    CHECK(far.status == FieldStatus::FieldNotPositive);
    CHECK(std::isnan(far.d_hat));
    CHECK_THROWS_AS(uncertainty_proxy(m, far, Eigen::MatrixXd::Identity(2, 2)),
                    std::domain_error);
}

TEST_CASE("zero on noiseless data") {
    const PointCloud c = circle(12, 0.2);
    for (auto kind : {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                      KernelKind::Matern32}) {
        const KernelModel k{kind, 0.06, 100.0};
        const auto m = LatentFieldModel::build(c, k, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto q = query_distance(m, c.point(i));
            CAPTURE(to_string(kind));
            REQUIRE(q.valid());
            CHECK(q.d_hat <= 1e-6 * k.lengthscale);
        }
    }
}

TEST_CASE("distance increases along a ray leaving a convex surface") {
    const auto m = LatentFieldModel::build(
        circle(60, 0.1), KernelModel{KernelKind::SquaredExponential, 0.03, 100.0}, 0.0);
    double prev = -1.0;
    int valid = 0;
    for (int i = 0; i <= 2000; ++i) {
        const double r = 0.1 + 0.5 * i / 2000.0;
        const auto q = query_distance_fast(m, std::span<const double>(v2(0.5 + r, 0.5).data(), 2));
        if (!q.valid()) break;
        REQUIRE(q.d_hat >= prev);
        prev = q.d_hat;
        ++valid;
    }
    CHECK(valid > 100);
}

TEST_CASE("distance gradient has unit norm near a well sampled surface") {
    const double l = 0.03;
    const double r0 = 0.2;
    const int n = static_cast<int>(2.0 * M_PI * r0 / 0.005);
    for (auto kind : {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                      KernelKind::Matern32}) {
        const KernelModel k{kind, l, 100.0};
        const auto m = LatentFieldModel::build(circle(n, r0), k, 0.01);
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> dist(0.5 * l, 3.0 * l), ang(0.0, 2.0 * M_PI);
        int good = 0, total = 0;
        for (int i = 0; i < 200; ++i) {
            const double d = dist(rng);
            const double t = ang(rng);
            const double r = r0 + (i % 2 == 0 ? d : -d);
            const auto q = query_distance(m, v2(0.5 + r * std::cos(t), 0.5 + r * std::sin(t)));
            ++total;
            if (!q.valid()) continue;
            const double norm = distance_gradient(k, q).norm();
            if (norm >= 0.8 && norm <= 1.2) ++good;
        }
        CAPTURE(to_string(kind));
        CHECK(good >= 0.9 * total);
    }
}

TEST_CASE("fusion weight limits") {
    const FusionParams p;
    const double l = 0.06;
    CHECK(fusion_weight(2.0 * l, l, p) == doctest::Approx(0.5));
    CHECK(fusion_weight(0.0, l, p) > 0.98);
    CHECK(fusion_weight(1.0, l, p) < 1e-12);
    CHECK(fusion_weight(1e6, l, p) == 0.0);
}

TEST_CASE("fused field on data and far away") {
    const PointCloud c = circle(30, 0.15);
    const auto m =
        LatentFieldModel::build(c, KernelModel{KernelKind::RationalQuadratic, 0.06, 100.0}, 0.0);
    const Eigen::VectorXd on = c.point(3);
    const auto q0 = query_fused(m, c, std::span<const double>(on.data(), 2));
    CHECK(q0.status != FieldStatus::FieldNotPositive);
    CHECK(q0.d_hat < 0.02);

    const Eigen::VectorXd far = v2(3.0, 3.0);
    const auto qf = query_fused(m, c, std::span<const double>(far.data(), 2));
    CHECK(qf.status == FieldStatus::Ok);
    CHECK(qf.d_hat == doctest::Approx(smooth_min(c, far, -50.0)).epsilon(1e-9));

    // A failed GP query falls back to the smooth minimum.
    PointCloud one(2);
    one.add(v2(0.0, 0.0));
    const auto se = LatentFieldModel::build(
        one, KernelModel{KernelKind::SquaredExponential, 0.01, 100.0}, 0.0);
    const Eigen::VectorXd x = v2(0.5, 0.0);
    const auto qs = query_fused(se, one, std::span<const double>(x.data(), 2));
    CHECK(qs.status == FieldStatus::Ok);
    CHECK(qs.d_hat == doctest::Approx(0.5));
}
