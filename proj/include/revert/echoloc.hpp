#pragma once

// Particle-filter echolocation on a plate: odometry-driven motion updates,
// envelope-likelihood weights evaluated through a distance field, periodic
// systematic resampling and a top-quantile position estimate.

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "revert/baselines.hpp"
#include "revert/gp_field.hpp"
#include "revert/rng.hpp"
#include "revert/ugw.hpp"

namespace revert::echoloc {

struct Particle {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double weight = 0.0;
};

enum class OracleKind { GpField, LogGpis, RectAnalytic };

// "ours", "loggpis", "rect"
std::string_view to_string(OracleKind kind) noexcept;
OracleKind parse_oracle(std::string_view text);

struct FilterConfig {
    int n_particles = 500;
    double beta = 5.0;
    int resample_interval = 5;
    double odom_noise_sd = 0.005;
    double estimate_quantile = 0.25;
    OracleKind oracle = OracleKind::GpField;

    void validate() const;
};

// Distance from a position to the mapped surface; NaN when the field cannot
// give one there.
class DistanceOracle {
public:
    virtual ~DistanceOracle() = default;
    [[nodiscard]] virtual double distance(const Eigen::Vector2d& p) const = 0;
};

class GpFieldOracle final : public DistanceOracle {
public:
    explicit GpFieldOracle(LatentFieldModel model) : model_(std::move(model)) {}
    [[nodiscard]] double distance(const Eigen::Vector2d& p) const override;

private:
    LatentFieldModel model_;
};

class LogGpisOracle final : public DistanceOracle {
public:
    explicit LogGpisOracle(LogGpisModel model) : model_(std::move(model)) {}
    [[nodiscard]] double distance(const Eigen::Vector2d& p) const override;

private:
    LogGpisModel model_;
};

class PolygonOracle final : public DistanceOracle {
public:
    explicit PolygonOracle(ugw::PlateScene scene) : scene_(std::move(scene)) {}
    [[nodiscard]] double distance(const Eigen::Vector2d& p) const override;

private:
    ugw::PlateScene scene_;
};

struct OracleParams {
    double boundary_gap = 0.02;  // spacing of the boundary samples fed to the GP fields
    double lengthscale = 0.03;
    double rq_alpha = 100.0;
    double sigma_n = 1e-3;
};

// Points every `gap` along each edge, corners included once.
PointCloud boundary_samples(const ugw::PlateScene& scene, double gap);

std::unique_ptr<DistanceOracle> make_oracle(OracleKind kind, const ugw::PlateScene& scene,
                                            const OracleParams& params = {});

// Uniform over the polygon (rejection sampling in its bounding box).
std::vector<Particle> initialize(const ugw::PlateScene& scene, int n, Rng& rng);

void motion_update(std::vector<Particle>& particles, const Eigen::Vector2d& odom_delta,
                   const FilterConfig& cfg, Rng& rng);

// w_i <- eta * exp(beta * e(d(p_i))) * w_i. Positions where the oracle fails
// get e = 0. Returns false when every weight vanished and the particles
// were reinitialized uniformly over the plate.
bool measurement_update(std::vector<Particle>& particles, const ugw::EnvelopeSignal& e,
                        const DistanceOracle& oracle, const FilterConfig& cfg,
                        const ugw::PlateScene& scene, Rng& rng);

// Systematic (low-variance) resampling; weights become uniform.
void resample(std::vector<Particle>& particles, Rng& rng);

// Mean position of the ceil(q N) highest-weight particles, ties broken by index.
Eigen::Vector2d estimate(const std::vector<Particle>& particles, double q);

struct Step {
    Eigen::Vector2d odom_delta = Eigen::Vector2d::Zero();  // as reported, noise included
    std::size_t measurement = 0;                           // index into the measurement set
    Eigen::Vector2d truth = Eigen::Vector2d::Zero();
};

// Random walk over the sensor grid (4-neighbour moves) with noisy odometry.
std::vector<Step> random_walk(int rows, int cols,
                              const std::vector<Eigen::Vector2d>& positions, int steps,
                              double odom_noise_sd, std::uint64_t seed);

struct FilterRun {
    std::vector<Eigen::Vector2d> estimates;
    std::vector<double> errors;
    int divergences = 0;
};

FilterRun run_filter(const std::vector<Step>& trajectory, const ugw::MeasurementSet& measurements,
                     const ugw::PlateScene& scene, const DistanceOracle& oracle,
                     const FilterConfig& cfg, std::uint64_t seed);

struct ExperimentConfig {
    int trajectories = 100;
    int steps = 300;
    double walk_odom_noise_sd = 0.002;  // noise in the reported odometry of each walk
    int burn_in = 50;                   // steps excluded from the converged statistics
    std::uint64_t seed = 1;
    FilterConfig filter;
    OracleParams oracle;
};

std::vector<std::vector<Step>> make_trajectories(const ugw::GridDataset& data,
                                                 const ExperimentConfig& cfg);

struct ExperimentResult {
    OracleKind oracle = OracleKind::GpField;
    std::vector<FilterRun> runs;
    double converged_median = 0.0;  // median error over all runs and steps after burn-in
};

// Runs every trajectory with the same per-trajectory filter seeds, so that
// oracles are compared on common random numbers.
ExperimentResult run_experiment(const ugw::GridDataset& data,
                                const std::vector<std::vector<Step>>& trajectories,
                                OracleKind oracle, const ExperimentConfig& cfg);

double converged_median(const std::vector<FilterRun>& runs, int burn_in);

}  // namespace revert::echoloc
