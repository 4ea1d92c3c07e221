#include "doctest.h"

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "revert/gp_field.hpp"

using namespace revert;

namespace {

KernelModel se(double l = 1.0) {
    return KernelModel{KernelKind::SquaredExponential, l, 100.0};
}

Eigen::VectorXd v2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

PointCloud single(double x = 0.0, double y = 0.0) {
    PointCloud c(2);
    c.add(v2(x, y));
    return c;
}

PointCloud circle(int n, double r, double cx = 0.5, double cy = 0.5) {
    PointCloud c(2);
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * M_PI * i / n;
        c.add(v2(cx + r * std::cos(t), cy + r * std::sin(t)));
    }
    return c;
}

}  // namespace

TEST_CASE("single observation gives unit weight") {
    for (auto kind : {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                      KernelKind::Matern32}) {
        const auto m = LatentFieldModel::build(single(), KernelModel{kind, 0.3, 100.0}, 0.0);
        REQUIRE(m.weights().size() == 1);
        CHECK(m.weights()[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m.jitter() == 0.0);
    }
}

TEST_CASE("two points one lengthscale apart") {
    PointCloud c(2);
    c.add(v2(0.0, 0.0));
    c.add(v2(1.0, 0.0));
    const auto m = LatentFieldModel::build(c, se(), 0.0);
    CHECK(m.weights()[0] == doctest::Approx(0.62245933120185459).epsilon(1e-14));
    CHECK(m.weights()[1] == doctest::Approx(0.62245933120185459).epsilon(1e-14));
    CHECK(m.weight_residual() < 1e-14);
}

TEST_CASE("identical points are regularized by jitter") {
    PointCloud c(2);
    c.add(v2(0.2, 0.2));
    c.add(v2(0.2, 0.2));
    const auto m = LatentFieldModel::build(c, se(), 0.0);
    CHECK(m.jitter() > 0.0);
    CHECK(m.jitter() <= 1e-6);
    CHECK(m.latent_mean(v2(0.2, 0.2)) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("jitter escalation gives up on an indefinite matrix") {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 2.0, 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    try {
        factorize_with_jitter(a, llt);
        FAIL("expected gram-not-pd");
    } catch (const GramNotPositiveDefinite& e) {
        CHECK(e.jitter() == doctest::Approx(1e-6));
        CHECK(std::string(e.what()).rfind("gram-not-pd", 0) == 0);
    }
}

TEST_CASE("invalid construction arguments") {
    CHECK_THROWS_AS(LatentFieldModel::build(PointCloud(2), se(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(LatentFieldModel::build(single(), se(), -1.0), std::invalid_argument);
    const auto m = LatentFieldModel::build(single(), se(), 0.0);
    Eigen::VectorXd q3 = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS((void)m.infer_latent(q3), std::invalid_argument);
    CHECK_THROWS_AS((void)m.infer_latent(v2(NAN, 0.0)), std::invalid_argument);
}

TEST_CASE("single observation latent values") {
    const auto m = LatentFieldModel::build(single(), se(), 0.0);
    const auto at = m.infer_latent(v2(0.0, 0.0));
    CHECK(at.o_hat == 1.0);
    CHECK(at.o_var == 0.0);
    CHECK(m.infer_latent(v2(1.0, 0.0)).o_hat ==
          doctest::Approx(0.60653065971263342).epsilon(1e-15));
    CHECK(m.latent_mean(v2(50.0, 0.0)) <= 0.0);
}

TEST_CASE("single observation reproduces the kernel exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto kind : {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                      KernelKind::Matern32}) {
        const KernelModel k{kind, 0.25, 100.0};
        const auto m = LatentFieldModel::build(single(0.1, -0.2), k, 0.0);
        for (int i = 0; i < 200; ++i) {
            const Eigen::VectorXd x = v2(u(rng), u(rng));
            const double d = (x - v2(0.1, -0.2)).norm();
            REQUIRE(std::abs(m.latent_mean(x) - kernel_eval(k, d)) <= 1e-14);
        }
    }
}

TEST_CASE("single observation gradient") {
    const auto m = LatentFieldModel::build(single(), se(), 0.0);
    const auto at = m.infer_gradient(v2(0.0, 0.0));
    CHECK(at.grad.norm() == 0.0);
    const auto q = m.infer_gradient(v2(1.0, 0.0));
    CHECK(q.grad[0] == doctest::Approx(-0.60653065971263342).epsilon(1e-14));
    CHECK(q.grad[1] == 0.0);
    // A value observation says nothing about the slope at its own location,
    // so the gradient posterior there is the prior.
    CHECK((at.grad_cov - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
    CHECK(q.grad_cov(0, 0) < 1.0);
}

TEST_CASE("gradient matches finite differences of the latent mean") {
    const PointCloud c = circle(40, 0.2);
    for (auto kind : {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                      KernelKind::Matern32}) {
        const KernelModel k{kind, 0.06, 100.0};
        const auto m = LatentFieldModel::build(c, k, 0.01);
        const double h = 1e-6 * k.lengthscale;
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.2, 0.8);
        int checked = 0;
        for (int i = 0; i < 100; ++i) {
            const Eigen::VectorXd x = v2(u(rng), u(rng));
            const auto q = m.infer_gradient(x);
            if (q.grad.norm() < 1e-6) continue;  // relative error is meaningless at a flat point
            Eigen::VectorXd fd(2);
            for (int a = 0; a < 2; ++a) {
                Eigen::VectorXd xp = x, xm = x;
                xp[a] += h;
                xm[a] -= h;
                fd[a] = (m.latent_mean(xp) - m.latent_mean(xm)) / (2.0 * h);
            }
            CAPTURE(to_string(kind));
            REQUIRE((fd - q.grad).norm() / q.grad.norm() <= 1e-4);
            ++checked;
        }
        CHECK(checked > 50);
    }
}

TEST_CASE("gradient covariance is symmetric positive semidefinite") {
    const auto m = LatentFieldModel::build(circle(30, 0.2), se(0.06), 0.02);
    for (double x : {0.5, 0.62, 0.71, 0.9}) {
        const auto q = m.infer_gradient(v2(x, 0.5));
        CHECK((q.grad_cov - q.grad_cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.grad_cov);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK(q.o_var >= 0.0);
    }
}

TEST_CASE("symmetric cloud gives a symmetric field") {
    const auto m = LatentFieldModel::build(circle(24, 0.2), se(0.06), 0.01);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng), y = u(rng);
        // reflection about the horizontal axis through the centre
        CHECK(std::abs(m.latent_mean(v2(x, y)) - m.latent_mean(v2(x, 1.0 - y))) <= 1e-12);
    }
}

TEST_CASE("adding an observation at the query does not increase variance") {
    PointCloud c = circle(12, 0.2);
    const Eigen::VectorXd x = v2(0.55, 0.5);
    const double before = LatentFieldModel::build(c, se(0.1), 0.05).infer_latent(x).o_var;
    c.add(x);
    const double after = LatentFieldModel::build(c, se(0.1), 0.05).infer_latent(x).o_var;
    CHECK(after <= before + 1e-15);
}

TEST_CASE("three dimensional clouds are supported") {
    PointCloud c(3);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    c.add(p);
    const auto m = LatentFieldModel::build(c, se(), 0.0);
    Eigen::VectorXd q(3);
    q << 0.0, 0.0, 1.0;
    const auto r = m.infer_gradient(q);
    CHECK(r.o_hat == doctest::Approx(std::exp(-0.5)));
    CHECK(r.grad[2] == doctest::Approx(-std::exp(-0.5)));
}

TEST_CASE("concurrent queries agree with serial ones") {
    const auto m = LatentFieldModel::build(circle(100, 0.25), se(0.06), 0.01);
    std::vector<double> serial(400), parallel(400);
    for (int i = 0; i < 400; ++i) serial[i] = m.latent_mean(v2(0.0025 * i, 0.4));
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = t; i < 400; i += 4) parallel[i] = m.latent_mean(v2(0.0025 * i, 0.4));
        });
    }
    for (auto& th : threads) th.join();
    CHECK(serial == parallel);
}
