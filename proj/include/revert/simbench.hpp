#pragma once

// Simulated distance-field benchmark: random sum-of-sines environments, noisy
// surface sampling, a dense ground-truth oracle and per-method RMSE and
// coverage statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "revert/distance.hpp"
#include "revert/point_cloud.hpp"

namespace revert::simbench {

// Queries closer than this to the true surface count as close range.
inline constexpr double kCloseRangeSplit = 0.05;

struct SineTerm {
    double amplitude = 0.0;
    double frequency = 0.0;  // rad/m
    double phase = 0.0;
};

struct EnvironmentSpec {
    int min_terms = 3;
    int max_terms = 6;
    double min_amplitude = 0.02;
    double max_amplitude = 0.15;
    double min_frequency = 1.0;
    double max_frequency = 12.0;
    double workspace = 1.0;  // square side, metres; the curve spans x in [0, workspace]
};

// y(x) = workspace / 2 + sum_j a_j sin(f_j x + phi_j) for x in [x_min, x_max].
struct SineEnvironment {
    std::vector<SineTerm> terms;
    double x_min = 0.0;
    double x_max = 1.0;
    double offset = 0.5;
    std::uint64_t seed = 0;

    [[nodiscard]] double y(double x) const;
    [[nodiscard]] double slope(double x) const;
    // Arc length between x_min and x_max by composite Simpson quadrature.
    [[nodiscard]] double arc_length() const;
};

SineEnvironment generate_environment(std::uint64_t seed, const EnvironmentSpec& spec = {});

// Points at arc-length spacing `gap` starting at x_min, each displaced by
// isotropic Gaussian noise of standard deviation noise_sd.
PointCloud sample_cloud(const SineEnvironment& env, double gap, double noise_sd,
                        std::uint64_t seed);

// Distance to the curve from the minimum over dense samples at arc-length
// spacing delta, so the answer is within delta / 2 of the exact distance.
// Samples are bucketed on a uniform grid over x; a coarse pass bounds the
// search window.
class GroundTruthOracle {
public:
    explicit GroundTruthOracle(const SineEnvironment& env, double delta = 1e-4);

    [[nodiscard]] double distance(double x, double y) const;
    [[nodiscard]] std::size_t nearest_index(double x, double y) const;
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] std::size_t size() const noexcept { return xs_.size(); }
    [[nodiscard]] double sample_x(std::size_t i) const { return xs_[i]; }
    [[nodiscard]] double sample_y(std::size_t i) const { return ys_[i]; }

private:
    [[nodiscard]] simd::MinResult search(double x, double y) const;

    double delta_;
    std::vector<double> xs_, ys_;
    std::vector<double> coarse_xs_, coarse_ys_;
    double coarse_spacing_ = 0.0;
    double bucket_width_ = 0.0;
    double x0_ = 0.0;
    std::vector<std::size_t> bucket_start_;  // first sample index with x >= x0 + b * width
};

// Benchmarked fields. "ours-*" is the reverted GP latent field for a kernel.
enum class Method { OursSe, OursRq, OursMatern, LogGpis, SmoothMin, Fused };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);
const std::vector<Method>& all_methods();

struct BenchConfig {
    int envs = 100;
    int queries = 40000;  // rounded to a square grid
    std::uint64_t seed = 1;
    std::vector<Method> methods = all_methods();
    EnvironmentSpec environment;
    double gap = 0.04;
    double noise_sd = 0.005;
    double lengthscale = 0.06;
    double rq_alpha = 100.0;
    double smooth_min_lambda = -50.0;
    FusionParams fusion;
    KernelKind fused_kernel = KernelKind::RationalQuadratic;
    double oracle_delta = 1e-4;
    int scatter_samples = 2500;
    // Per-kernel corrective noise; kernels without an entry are calibrated on
    // a separate environment drawn from the same distribution.
    std::map<KernelKind, double> sigma_n;
    // LogGPIS is calibrated against its own latent model exp(-sqrt3 d / l).
    std::optional<double> loggpis_sigma_n;
};

struct MethodStats {
    double close_rmse = 0.0;
    double far_rmse = 0.0;
    double full_rmse = 0.0;
    double coverage = 0.0;
    long close_count = 0;
    long far_count = 0;
};

struct EnvironmentResult {
    std::uint64_t seed = 0;
    std::size_t cloud_size = 0;
    std::map<Method, MethodStats> stats;
};

struct ScatterRow {
    int env = 0;
    double x = 0.0, y = 0.0;
    double true_distance = 0.0;
    std::map<Method, double> error;  // NaN when the method failed
};

struct BenchReport {
    BenchConfig config;
    int grid_side = 0;
    std::map<KernelKind, double> sigma_n;  // values actually used
    double loggpis_sigma_n = 0.0;
    std::map<Method, MethodStats> mean;    // per-environment RMSE averaged over environments
    std::vector<EnvironmentResult> environments;
    std::vector<ScatterRow> scatter;
};

// Calibration scene: the environment from the seed's "calibration" stream,
// sampled like the benchmark clouds, with a grid of spacing l/2 restricted to
// the band within 3l of the curve.
struct CalibrationScene {
    PointCloud cloud;
    PointCloud grid;
    std::vector<double> gt_distances;
};
CalibrationScene calibration_scene(const BenchConfig& config);

double calibrate_kernel_noise(const BenchConfig& config, KernelKind kind);
double calibrate_loggpis_noise(const BenchConfig& config);

BenchReport run_benchmark(const BenchConfig& config);

// Moving-average error profile over samples sorted by true distance.
struct Profile {
    std::vector<double> distance;
    std::vector<double> error;
};
Profile smoothed_profile(std::vector<double> distance, std::vector<double> abs_error, int window);

// Least-squares fit of y = a log(1 + b x); b is found by golden-section search
// on log b, a in closed form.
struct LogFit {
    double a = 0.0;
    double b = 0.0;
    double r_squared = 0.0;
};
LogFit fit_log1p(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace revert::simbench
