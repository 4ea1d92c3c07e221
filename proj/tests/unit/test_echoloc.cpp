#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "revert/echoloc.hpp"

using namespace revert;
using namespace revert::echoloc;

namespace {

// Distance given by the particle's x coordinate; NaN when x is negative.
class XOracle final : public DistanceOracle {
public:
    double distance(const Eigen::Vector2d& p) const override {
        return p.x() < 0.0 ? std::numeric_limits<double>::quiet_NaN() : p.x();
    }
};

std::vector<Particle> uniform_particles(std::vector<Eigen::Vector2d> positions) {
    std::vector<Particle> out;
    for (const auto& p : positions) out.push_back({p, 1.0 / static_cast<double>(positions.size())});
    return out;
}

// e(0) = 0, e(0.01) = 1, zero beyond.
ugw::EnvelopeSignal step_envelope() {
    ugw::EnvelopeSignal e;
    e.step = 0.01;
    e.values = {0.0, 1.0, 0.0, 0.0};
    return e;
}

double weight_sum(const std::vector<Particle>& ps) {
    return std::accumulate(ps.begin(), ps.end(), 0.0,
                           [](double s, const Particle& p) { return s + p.weight; });
}

const ugw::PlateScene& plate() {
    static const auto scene = ugw::PlateScene::rectangle(0.6, 0.45);
    return scene;
}

}  // namespace

TEST_CASE("oracle names round trip") {
    for (auto k : {OracleKind::GpField, OracleKind::LogGpis, OracleKind::RectAnalytic}) {
        CHECK(parse_oracle(to_string(k)) == k);
    }
    CHECK_THROWS_AS((void)parse_oracle("gpis"), std::invalid_argument);
}

TEST_CASE("filter configuration is validated") {
    FilterConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.estimate_quantile = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.estimate_quantile = 1.0;
    CHECK_NOTHROW(cfg.validate());
    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("motion update") {
    Rng rng(3);
    FilterConfig cfg;
    cfg.odom_noise_sd = 0.0;
    auto ps = uniform_particles({{0.1, 0.2}, {0.3, 0.1}});
    const auto before = ps;
    motion_update(ps, Eigen::Vector2d::Zero(), cfg, rng);
    CHECK(ps[0].position == before[0].position);
    CHECK(ps[1].position == before[1].position);
    motion_update(ps, Eigen::Vector2d(0.05, 0.0), cfg, rng);
    CHECK(ps[0].position.x() == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(ps[1].position.x() == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(ps[0].weight == before[0].weight);

    SUBCASE("injected noise covariance") {
        cfg.odom_noise_sd = 0.005;
        std::vector<Particle> many(10000, Particle{Eigen::Vector2d::Zero(), 1e-4});
        motion_update(many, Eigen::Vector2d::Zero(), cfg, rng);
        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const auto& p : many) cov += p.position * p.position.transpose();
        cov /= static_cast<double>(many.size());
        const double v = cfg.odom_noise_sd * cfg.odom_noise_sd;
        CHECK(std::abs(cov(0, 0) / v - 1.0) < 0.05);
        CHECK(std::abs(cov(1, 1) / v - 1.0) < 0.05);
        CHECK(std::abs(cov(0, 1)) / v < 0.05);
    }
}

TEST_CASE("measurement update") {
    Rng rng(5);
    FilterConfig cfg;
    const XOracle oracle;

    SUBCASE("two-particle toy") {
        auto ps = uniform_particles({{0.01, 0.0}, {0.0, 0.0}});
        CHECK(measurement_update(ps, step_envelope(), oracle, cfg, plate(), rng));
        const double e5 = std::exp(5.0);
        CHECK(ps[0].weight == doctest::Approx(e5 / (e5 + 1.0)).epsilon(1e-14));
        CHECK(ps[1].weight == doctest::Approx(1.0 / (e5 + 1.0)).epsilon(1e-12));
        CHECK(ps[0].weight == doctest::Approx(0.9933).epsilon(1e-4));
    }
    SUBCASE("flat envelope leaves weights unchanged") {
        ugw::EnvelopeSignal flat;
        flat.step = 0.01;
        flat.values.assign(50, 0.3);
        std::vector<Particle> ps = {{{0.1, 0}, 0.2}, {{0.2, 0}, 0.5}, {{0.3, 0}, 0.3}};
        CHECK(measurement_update(ps, flat, oracle, cfg, plate(), rng));
        CHECK(ps[0].weight == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(ps[1].weight == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(ps[2].weight == doctest::Approx(0.3).epsilon(1e-14));
    }
    SUBCASE("particle at the echo receives the largest factor") {
        auto ps = uniform_particles({{0.005, 0}, {0.01, 0}, {0.015, 0}, {0.03, 0}});
        CHECK(measurement_update(ps, step_envelope(), oracle, cfg, plate(), rng));
        CHECK(ps[1].weight > ps[0].weight);
        CHECK(ps[1].weight > ps[2].weight);
        CHECK(ps[1].weight / ps[3].weight == doctest::Approx(std::exp(5.0)).epsilon(1e-12));
    }
    SUBCASE("failed field queries are uninformative") {
        auto ps = uniform_particles({{-0.1, 0}, {0.0, 0}});
        CHECK(measurement_update(ps, step_envelope(), oracle, cfg, plate(), rng));
        CHECK(ps[0].weight == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("weights stay normalized") {
        std::vector<Particle> ps;
        std::uniform_real_distribution<double> u(0.0, 0.04);
        for (int i = 0; i < 1000; ++i) ps.push_back({{u(rng), 0.0}, 1e-3});
        for (int k = 0; k < 20; ++k) {
            CHECK(measurement_update(ps, step_envelope(), oracle, cfg, plate(), rng));
            CHECK(std::abs(weight_sum(ps) - 1.0) <= 1e-12);
        }
    }
    SUBCASE("all-zero weights reinitialize") {
        std::vector<Particle> ps = {{{0.1, 0}, 0.0}, {{0.2, 0}, 0.0}};
        CHECK_FALSE(measurement_update(ps, step_envelope(), oracle, cfg, plate(), rng));
        REQUIRE(ps.size() == 2);
        for (const auto& p : ps) {
            CHECK(plate().contains(p.position));
            CHECK(p.weight == 0.5);
        }
    }
}

TEST_CASE("systematic resampling") {
    Rng rng(11);
    SUBCASE("uniform weights keep every particle once") {
        auto ps = uniform_particles({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}});
        resample(ps, rng);
        for (int i = 0; i < 5; ++i) CHECK(ps[static_cast<std::size_t>(i)].position.x() == i);
    }
    SUBCASE("a single dominant particle is copied everywhere") {
        std::vector<Particle> ps = {{{0, 0}, 0.0}, {{1, 0}, 1.0}, {{2, 0}, 0.0}};
        resample(ps, rng);
        for (const auto& p : ps) {
            CHECK(p.position.x() == 1.0);
            CHECK(p.weight == doctest::Approx(1.0 / 3.0));
        }
    }
    SUBCASE("expected copies follow the weights") {
        const std::vector<double> w = {0.05, 0.15, 0.3, 0.5};
        std::vector<double> copies(w.size(), 0.0);
        const int trials = 1000;
        for (int t = 0; t < trials; ++t) {
            std::vector<Particle> ps;
            for (std::size_t i = 0; i < w.size(); ++i) ps.push_back({{double(i), 0}, w[i]});
            resample(ps, rng);
            for (const auto& p : ps) copies[static_cast<std::size_t>(p.position.x())] += 1.0;
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(copies[i] / (trials * 4.0) == doctest::Approx(w[i]).epsilon(0.05));
        }
    }
}

TEST_CASE("top-quantile estimate") {
    const auto ps = uniform_particles({{0, 0}, {1, 0}, {2, 2}, {3, 2}});
    CHECK((estimate(ps, 1.0) - Eigen::Vector2d(1.5, 1.0)).norm() < 1e-15);
    std::vector<Particle> dominant = ps;
    dominant[2].weight = 0.97;
    for (std::size_t i : {0u, 1u, 3u}) dominant[i].weight = 0.01;
    CHECK(estimate(dominant, 0.25) == Eigen::Vector2d(2, 2));
    // Ties are broken by index: with equal weights q = 0.5 keeps the first two.
    CHECK(estimate(ps, 0.5) == Eigen::Vector2d(0.5, 0.0));
    CHECK_THROWS_AS((void)estimate(ps, 0.0), std::invalid_argument);

    SUBCASE("permutation invariance with distinct weights") {
        std::vector<Particle> a;
        for (int i = 0; i < 20; ++i) a.push_back({{0.01 * i, 0.02 * (i % 3)}, 1.0 + i});
        std::vector<Particle> b(a.rbegin(), a.rend());
        CHECK((estimate(a, 0.25) - estimate(b, 0.25)).norm() < 1e-15);
    }
}

TEST_CASE("boundary samples and oracles") {
    const auto cloud = boundary_samples(plate(), 0.02);
    CHECK(cloud.size() == 2 * (30 + 23));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector2d p(cloud.coord(i, 0), cloud.coord(i, 1));
        const double edge = std::min({p.x(), 0.6 - p.x(), p.y(), 0.45 - p.y()});
        CHECK(std::abs(edge) < 1e-12);
    }
    const auto gp = make_oracle(OracleKind::GpField, plate());
    const auto rect = make_oracle(OracleKind::RectAnalytic, plate());
    const auto log = make_oracle(OracleKind::LogGpis, plate());
    double gp_sq = 0.0;
    double log_sq = 0.0;
    int n = 0;
    for (int i = 1; i < 30; ++i) {
        for (int j = 1; j < 22; ++j) {
            const Eigen::Vector2d x(0.02 * i, 0.02 * j);
            const double truth = rect->distance(x);
            CHECK(truth == doctest::Approx(plate().boundary_distance(x)));
            gp_sq += std::pow(gp->distance(x) - truth, 2);
            log_sq += std::pow(log->distance(x) - truth, 2);
            ++n;
        }
    }
    CHECK(std::sqrt(gp_sq / n) < 0.005);
    CHECK(std::sqrt(log_sq / n) > std::sqrt(gp_sq / n));
}

TEST_CASE("random walks over the grid") {
    const auto positions = ugw::grid_positions(plate(), 9, 12, 0.045);
    const auto walk = random_walk(9, 12, positions, 300, 0.0, 7);
    REQUIRE(walk.size() == 300);
    CHECK(walk[0].odom_delta.norm() == 0.0);
    for (std::size_t s = 1; s < walk.size(); ++s) {
        CHECK(walk[s].odom_delta.norm() == doctest::Approx(0.045).epsilon(1e-12));
        CHECK((walk[s].truth - walk[s - 1].truth - walk[s].odom_delta).norm() < 1e-15);
        CHECK(walk[s].truth == positions[walk[s].measurement]);
    }
    const auto again = random_walk(9, 12, positions, 300, 0.0, 7);
    CHECK(again.back().measurement == walk.back().measurement);
    CHECK_THROWS_AS((void)random_walk(9, 12, positions, 0, 0.0, 7), std::invalid_argument);
}

TEST_CASE("filter runs are deterministic and localize") {
    ugw::GridDatasetSpec spec;
    const auto data = ugw::make_grid_dataset(spec);
    ExperimentConfig cfg;
    cfg.trajectories = 6;
    cfg.steps = 150;
    const auto trajectories = make_trajectories(data, cfg);
    const auto first = run_experiment(data, trajectories, OracleKind::RectAnalytic, cfg);
    const auto second = run_experiment(data, trajectories, OracleKind::RectAnalytic, cfg);
    REQUIRE(first.runs.size() == 6);
    for (std::size_t t = 0; t < first.runs.size(); ++t) {
        CHECK(first.runs[t].errors == second.runs[t].errors);
    }
    CHECK(first.converged_median < 0.05);
}

TEST_CASE("converged median") {
    FilterRun a;
    a.errors = {9.0, 9.0, 1.0, 2.0};
    FilterRun b;
    b.errors = {9.0, 9.0, 3.0, 4.0};
    CHECK(converged_median({a, b}, 2) == doctest::Approx(2.5));
    CHECK_THROWS_AS((void)converged_median({a}, 10), std::invalid_argument);
}
