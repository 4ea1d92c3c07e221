#include "doctest.h"

#include <chrono>
#include <cmath>
#include <vector>

#include "revert/kernels.hpp"

using namespace revert;

namespace {

KernelModel make(KernelKind kind, double l = 1.0, double alpha = 100.0) {
    KernelModel k;
    k.kind = kind;
    k.lengthscale = l;
    k.rq_alpha = alpha;
    return k;
}

const KernelKind kAll[] = {KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
                           KernelKind::Matern32};

}  // namespace

TEST_CASE("kernel values at reference points") {
    CHECK(kernel_eval(make(KernelKind::SquaredExponential), 0.0) == 1.0);
    CHECK(kernel_eval(make(KernelKind::RationalQuadratic, 1.0, 1.0), 1.0) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // (1 + sqrt3) exp(-sqrt3), mpmath
    CHECK(kernel_eval(make(KernelKind::Matern32), 1.0) ==
          doctest::Approx(0.48335772459650765).epsilon(1e-15));
    for (auto kind : kAll) CHECK(kernel_eval(make(kind, 0.37), 0.0) == 1.0);
}

TEST_CASE("kernel derivative at reference points") {
    CHECK(kernel_derivative(make(KernelKind::SquaredExponential), 0.0) == 0.0);
    CHECK(kernel_derivative(make(KernelKind::SquaredExponential), 1.0) ==
          doctest::Approx(-0.60653065971263342).epsilon(1e-14));
    CHECK(kernel_derivative(make(KernelKind::Matern32), 1.0) ==
          doctest::Approx(-0.53076361895329261).epsilon(1e-14));
}

TEST_CASE("invalid distances are rejected") {
    const auto k = make(KernelKind::RationalQuadratic);
    CHECK_THROWS_AS(kernel_eval(k, -1e-9), std::invalid_argument);
    CHECK_THROWS_AS(kernel_eval(k, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(kernel_eval(k, INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(kernel_derivative(k, -1.0), std::invalid_argument);
    KernelModel bad = k;
    bad.lengthscale = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("reverting inverts the reference values") {
    CHECK(reverting(make(KernelKind::SquaredExponential), std::exp(-0.5)) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(reverting(make(KernelKind::RationalQuadratic, 1.0, 1.0), 2.0 / 3.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(reverting(make(KernelKind::Matern32), 0.48335772459650765) - 1.0) <= 1e-9);
    for (auto kind : kAll) CHECK(reverting(make(kind, 0.2), 1.0) == 0.0);
}

TEST_CASE("reverting domain errors") {
    for (auto kind : kAll) {
        const auto k = make(kind);
        CHECK_THROWS_AS(reverting(k, 0.0), FieldNotPositive);
        CHECK_THROWS_AS(reverting(k, -0.1), FieldNotPositive);
        CHECK_THROWS_AS(reverting(k, 1.0 + 1e-12), std::invalid_argument);
        CHECK_THROWS_AS(reverting(k, std::nan("")), std::invalid_argument);
    }
}

TEST_CASE("squared exponential underflow is reported, not garbage") {
    const auto k = make(KernelKind::SquaredExponential, 1.0);
    CHECK(kernel_eval(k, 50.0) == 0.0);
    CHECK(log_kernel_eval(k, 50.0) == doctest::Approx(-1250.0));
    CHECK_THROWS_AS(reverting(k, kernel_eval(k, 50.0)), FieldNotPositive);
    // Subnormal latent values still revert.
    CHECK(reverting(k, kernel_eval(k, 38.0)) == doctest::Approx(38.0).epsilon(1e-9));
}

TEST_CASE("round trip over a dense grid") {
    const auto start = std::chrono::steady_clock::now();
    for (auto kind : kAll) {
        for (double l : {0.03, 1.0}) {
            const auto k = make(kind, l);
            const double tol = kind == KernelKind::Matern32 ? 1e-6 : 1e-8;
            double worst = 0.0;
            for (int i = 0; i <= 1000; ++i) {
                const double d = 20.0 * l * i / 1000.0;
                const double back = reverting(k, kernel_eval(k, d));
                worst = std::max(worst, std::abs(back - d) / std::max(d, l));
            }
            CAPTURE(to_string(kind));
            CAPTURE(l);
            CHECK(worst <= tol);
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 1.0);
}

TEST_CASE("kernels are strictly decreasing") {
    for (auto kind : kAll) {
        const auto k = make(kind, 0.5);
        double prev = kernel_eval(k, 0.0);
        for (int i = 1; i <= 2000; ++i) {
            const double v = kernel_eval(k, 10.0 * 0.5 * i / 2000.0);
            REQUIRE(v < prev);
            REQUIRE(v > 0.0);
            prev = v;
        }
    }
}

TEST_CASE("analytic derivative matches central differences") {
    for (auto kind : kAll) {
        for (double l : {0.06, 1.0}) {
            const auto k = make(kind, l);
            const double h = 1e-6 * l;
            double worst = 0.0;
            for (int i = 0; i <= 500; ++i) {
                const double d = 1e-3 * l * std::pow(2e4, i / 500.0);  // [1e-3 l, 20 l]
                const double fd = (kernel_eval(k, d + h) - kernel_eval(k, d - h)) / (2.0 * h);
                const double an = kernel_derivative(k, d);
                worst = std::max(worst, std::abs(fd - an) / std::abs(an));
            }
            CAPTURE(to_string(kind));
            CHECK(worst <= 1e-6);
        }
    }
}

TEST_CASE("radial factor is continuous at the origin") {
    for (auto kind : kAll) {
        const auto k = make(kind, 0.3);
        CHECK(kernel_radial_factor(k, 0.0) == doctest::Approx(kernel_radial_factor(k, 1e-9)));
        CHECK(kernel_radial_factor(k, 0.0) == doctest::Approx(-kernel_gradient_prior_variance(k)));
    }
}

TEST_CASE("kernel kind names round trip") {
    for (auto kind : kAll) CHECK(parse_kernel_kind(to_string(kind)) == kind);
    CHECK_THROWS_AS(parse_kernel_kind("whittle"), std::invalid_argument);
}
