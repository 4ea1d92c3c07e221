#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "revert/simbench.hpp"

using namespace revert;
using namespace revert::simbench;

namespace {

BenchConfig small_config() {
    BenchConfig cfg;
    cfg.envs = 2;
    cfg.queries = 2500;
    cfg.scatter_samples = 100;
    cfg.sigma_n = {{KernelKind::SquaredExponential, 0.13},
                   {KernelKind::RationalQuadratic, 0.16},
                   {KernelKind::Matern32, 0.23}};
    cfg.loggpis_sigma_n = 0.87;
    return cfg;
}

}  // namespace

TEST_CASE("environment generation") {
    const auto a = generate_environment(42);
    const auto b = generate_environment(42);
    REQUIRE(a.terms.size() == b.terms.size());
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
        CHECK(a.terms[i].amplitude == b.terms[i].amplitude);
        CHECK(a.terms[i].phase == b.terms[i].phase);
    }
    std::set<double> distinct;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto env = generate_environment(s);
        CHECK(env.terms.size() >= 3);
        CHECK(env.terms.size() <= 6);
        for (const auto& t : env.terms) {
            CHECK(t.amplitude >= 0.02);
            CHECK(t.amplitude <= 0.15);
            CHECK(t.frequency >= 1.0);
            CHECK(t.frequency <= 12.0);
            CHECK(t.phase >= 0.0);
            CHECK(t.phase < 2.0 * M_PI);
        }
        distinct.insert(env.y(0.37));
    }
    CHECK(distinct.size() == 100);
}

TEST_CASE("straight-line environment") {
    SineEnvironment line;
    line.terms = {{0.0, 3.0, 0.2}, {0.0, 7.0, 1.0}};
    const GroundTruthOracle oracle(line);
    CHECK(line.arc_length() == doctest::Approx(1.0).epsilon(1e-12));
    for (double y : {0.5, 0.6, 0.9, 0.1}) {
        CHECK(std::abs(oracle.distance(0.3, y) - std::abs(y - 0.5)) <= oracle.delta() / 2);
    }
}

TEST_CASE("ground-truth oracle") {
    const auto env = generate_environment(7);
    const GroundTruthOracle oracle(env);
    SUBCASE("points on the curve") {
        for (double x = 0.01; x < 1.0; x += 0.0731) CHECK(oracle.distance(x, env.y(x)) <= oracle.delta() / 2);
    }
    SUBCASE("identical argmin to brute force") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 200; ++k) {
            const double x = u(rng);
            const double y = u(rng);
            std::size_t best = 0;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                const double d2 = std::pow(oracle.sample_x(i) - x, 2) + std::pow(oracle.sample_y(i) - y, 2);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = i;
                }
            }
            CHECK(oracle.nearest_index(x, y) == best);
            CHECK(oracle.distance(x, y) == std::sqrt(best_d2));
        }
    }
}

TEST_CASE("surface sampling") {
    const auto env = generate_environment(11);
    const GroundTruthOracle oracle(env);
    const auto exact = sample_cloud(env, 0.04, 0.0, 5);
    CHECK(exact.size() == static_cast<std::size_t>(std::floor(env.arc_length() / 0.04)) + 1);
    for (std::size_t i = 0; i < exact.size(); ++i) {
        CHECK(oracle.distance(exact.coord(i, 0), exact.coord(i, 1)) <= oracle.delta() / 2 + 1e-12);
        if (i > 0) {
            const double step = std::hypot(exact.coord(i, 0) - exact.coord(i - 1, 0),
                                           exact.coord(i, 1) - exact.coord(i - 1, 1));
            CHECK(step <= 0.04 + 1e-9);
            CHECK(step > 0.03);
        }
    }
    SUBCASE("typical sample counts") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto n = sample_cloud(generate_environment(s), 0.04, 0.0, 1).size();
            CHECK(n >= 25);
            CHECK(n <= 60);
        }
    }
    SUBCASE("positional noise") {
        double sum = 0.0;
        long count = 0;
        for (std::uint64_t s = 0; s < 40; ++s) {
            const auto cloud = sample_cloud(env, 0.04, 0.005, s);
            for (std::size_t i = 0; i < cloud.size(); ++i) {
                sum += std::pow(oracle.distance(cloud.coord(i, 0), cloud.coord(i, 1)), 2);
                ++count;
            }
        }
        // Only the normal component of isotropic noise moves a point off the curve.
        CHECK(std::sqrt(sum / count) == doctest::Approx(0.005).epsilon(0.08));
    }
}

TEST_CASE("method names") {
    for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
    CHECK(all_methods().size() == 6);
    CHECK_THROWS_AS((void)parse_method("gpis"), std::invalid_argument);
}

TEST_CASE("small benchmark run") {
    const auto cfg = small_config();
    const auto a = run_benchmark(cfg);
    const auto b = run_benchmark(cfg);
    CHECK(a.grid_side == 50);
    REQUIRE(a.environments.size() == 2);
    CHECK(a.scatter.size() == 100);
    for (Method m : all_methods()) {
        const auto& s = a.mean.at(m);
        CHECK(s.close_rmse == b.mean.at(m).close_rmse);
        CHECK(s.far_rmse == b.mean.at(m).far_rmse);
        CHECK(s.coverage >= 0.0);
        CHECK(s.coverage <= 1.0);
        CHECK(s.close_rmse > 0.0);
    }
    CHECK(a.sigma_n.at(KernelKind::RationalQuadratic) == 0.16);

    SUBCASE("halving the oracle spacing leaves RMSE unchanged") {
        auto fine_cfg = cfg;
        fine_cfg.oracle_delta = cfg.oracle_delta / 2;
        const auto fine = run_benchmark(fine_cfg);
        for (Method m : all_methods()) {
            CHECK(std::abs(fine.mean.at(m).close_rmse - a.mean.at(m).close_rmse) <= 1e-4);
            CHECK(std::abs(fine.mean.at(m).far_rmse - a.mean.at(m).far_rmse) <= 1e-4);
        }
    }
}

TEST_CASE("profile helpers") {
    const auto p = smoothed_profile({0.3, 0.1, 0.2, 0.4}, {1.0, 1.0, 1.0, 1.0}, 2);
    REQUIRE(p.distance.size() == 3);
    CHECK(p.distance[0] == doctest::Approx(0.15));
    CHECK(p.error[2] == doctest::Approx(1.0));
    CHECK(smoothed_profile({0.1}, {1.0}, 2).distance.empty());
    CHECK_THROWS_AS((void)smoothed_profile({0.1}, {}, 1), std::invalid_argument);

    std::vector<double> x;
    std::vector<double> y;
    for (int i = 0; i <= 50; ++i) {
        x.push_back(0.004 * i);
        y.push_back(0.02 * std::log1p(30.0 * x.back()));
    }
    const auto fit = fit_log1p(x, y);
    CHECK(fit.a == doctest::Approx(0.02).epsilon(1e-4));
    CHECK(fit.b == doctest::Approx(30.0).epsilon(1e-4));
    CHECK(fit.r_squared > 0.999999);
}
