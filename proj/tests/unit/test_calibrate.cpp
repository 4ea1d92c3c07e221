#include "doctest.h"

#include <cmath>

#include "revert/calibrate.hpp"
#include "revert/simbench.hpp"

using namespace revert;

namespace {

simbench::BenchConfig scene_config(double noise_sd) {
    simbench::BenchConfig cfg;
    cfg.lengthscale = 0.03;
    cfg.gap = 0.02;
    cfg.noise_sd = noise_sd;
    return cfg;
}

CalibrationResult calibrate(double noise_sd) {
    const auto cfg = scene_config(noise_sd);
    const auto scene = simbench::calibration_scene(cfg);
    const KernelModel kernel{KernelKind::RationalQuadratic, cfg.lengthscale, cfg.rq_alpha};
    return learn_sigma_n(scene.cloud, kernel, scene.grid, scene.gt_distances);
}

}  // namespace

TEST_CASE("calibration scene") {
    const auto cfg = scene_config(0.005);
    const auto a = simbench::calibration_scene(cfg);
    const auto b = simbench::calibration_scene(cfg);
    REQUIRE(a.grid.size() == a.gt_distances.size());
    CHECK(a.grid.size() > 100);
    CHECK(a.grid.size() <= 2000);
    CHECK(a.cloud.size() == b.cloud.size());
    CHECK(a.gt_distances == b.gt_distances);
    for (double d : a.gt_distances) CHECK(d <= 3.0 * cfg.lengthscale + 1e-12);
}

TEST_CASE("objective is finite at both search bounds") {
    const auto cfg = scene_config(0.005);
    const auto scene = simbench::calibration_scene(cfg);
    const KernelModel kernel{KernelKind::RationalQuadratic, cfg.lengthscale, cfg.rq_alpha};
    std::vector<double> targets;
    for (double d : scene.gt_distances) targets.push_back(kernel_eval(kernel, d));
    const CalibrationOptions opts;
    CHECK(std::isfinite(mahalanobis_objective(scene.cloud, kernel, scene.grid, targets, opts.lower)));
    CHECK(std::isfinite(mahalanobis_objective(scene.cloud, kernel, scene.grid, targets, opts.upper)));
    // The diagonal approximation is finite too.
    CHECK(std::isfinite(mahalanobis_objective(scene.cloud, kernel, scene.grid, targets, 0.1, 10)));
}

TEST_CASE("calibrated noise grows with the sample noise") {
    const auto clean = calibrate(0.0);
    const auto noisy = calibrate(0.005);
    const auto noisier = calibrate(0.01);
    MESSAGE("sigma_n: clean " << clean.sigma_n << ", 0.005 " << noisy.sigma_n << ", 0.01 "
                              << noisier.sigma_n);
    CHECK(noisy.sigma_n > clean.sigma_n);
    CHECK(noisier.sigma_n >= noisy.sigma_n);
    CHECK(noisy.objective <= noisy.objective_at_lower);
    CHECK(noisy.objective <= noisy.objective_at_upper);
    CHECK(noisy.sigma_n >= 1e-6);
    CHECK(noisy.sigma_n <= 1.0);
    CHECK(calibrate(0.005).sigma_n == noisy.sigma_n);
}

TEST_CASE("calibration argument errors") {
    const auto scene = simbench::calibration_scene(scene_config(0.005));
    const KernelModel kernel{KernelKind::RationalQuadratic, 0.03, 100.0};
    std::vector<double> short_gt(scene.gt_distances.begin(), scene.gt_distances.end() - 1);
    CHECK_THROWS_AS((void)learn_sigma_n(scene.cloud, kernel, scene.grid, short_gt), std::invalid_argument);
}
