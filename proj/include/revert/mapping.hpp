#pragma once

// Mapping from UGW measurements at known sensor positions: virtual surface
// observations X are optimized so that the distance field they induce
// explains first-echo distances (stage 1), then the full envelopes
// (stage 2). Also a delay-and-sum likelihood map for comparison.

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "revert/gp_field.hpp"
#include "revert/ugw.hpp"

namespace revert::mapping {

// ---- damped least squares ----

struct LsqOptions {
    double fd_step = 1e-5;           // forward-difference step per parameter
    double rel_cost_tol = 1e-8;      // stop when the relative cost decrease falls below this
    double step_tol = 1e-9;          // stop when the step norm falls below this
    int max_iterations = 200;
    double initial_damping = 1e-3;   // relative to the largest diagonal of J^T J
};

enum class LsqTermination { CostDecrease, SmallStep, MaxIterations };
std::string_view to_string(LsqTermination t) noexcept;

struct LsqReport {
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;                 // Jacobian evaluations
    std::vector<double> accepted_costs; // cost after every accepted step, initial cost first
    LsqTermination termination = LsqTermination::MaxIterations;
    int jacobian_rank = 0;              // numerical rank at the final point
};

// Fills r (already sized) with the residuals at x.
using ResidualFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r)>;

Eigen::MatrixXd forward_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 std::size_t residuals, double step);
Eigen::MatrixXd central_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 std::size_t residuals, double step);

// Levenberg-Marquardt on sum r_i^2 with Nielsen's damping update. x is
// updated in place.
LsqReport levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd& x, std::size_t residuals,
                              const LsqOptions& opts = {});

// ---- map state and stages ----

enum class FieldModel { Ours, LogGpis };
std::string_view to_string(FieldModel m) noexcept;
FieldModel parse_field_model(std::string_view text);

struct MapState {
    std::vector<Eigen::Vector2d> points;  // chain order used by the regularizer
    double reg_alpha = 1e-2;
    KernelModel kernel{KernelKind::RationalQuadratic, 0.06, 100.0};
    double sigma_n = 0.01;
    FieldModel field = FieldModel::Ours;
};

// Q = ceil(perimeter / (1.5 l)).
int default_point_count(double perimeter, double lengthscale);

// Q points on a circle of radius median(first_echo) + margin around the
// sensor centroid, in increasing angle from the +x axis.
std::vector<Eigen::Vector2d> init_virtual_points(const std::vector<Eigen::Vector2d>& sensors,
                                                 const std::vector<double>& first_echo, int q,
                                                 double margin);

Eigen::VectorXd flatten(const std::vector<Eigen::Vector2d>& points);
std::vector<Eigen::Vector2d> unflatten(const Eigen::VectorXd& x);

// Distance field induced by a set of virtual observations. Positions where
// the reverting field fails fall back to the fused field; fallbacks are
// counted.
class MapField {
public:
    MapField(const std::vector<Eigen::Vector2d>& points, const MapState& state);
    // Sets *fell_back when the fused field had to be used.
    [[nodiscard]] double distance(const Eigen::Vector2d& p, bool* fell_back = nullptr) const;
    [[nodiscard]] const LatentFieldModel& latent() const noexcept { return model_; }

private:
    LatentFieldModel model_;
    FieldModel field_;
};

// e(d) by monotone piecewise-cubic interpolation of the envelope grid; 0
// outside the grid.
class EnvelopeInterpolant {
public:
    explicit EnvelopeInterpolant(const ugw::EnvelopeSignal& e);
    [[nodiscard]] double operator()(double d) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    double max_distance_ = 0.0;
};

struct StageResult {
    MapState state;
    LsqReport report;
    std::size_t fallbacks = 0;  // field failures during the final residual evaluation
};

// Residuals: d_i - d(p_i; X), then sqrt(alpha) |x_j - x_{j-1}|.
void stage1_residuals(const std::vector<Eigen::Vector2d>& sensors, const std::vector<double>& echo,
                      const MapState& state, const Eigen::VectorXd& x, Eigen::VectorXd& r,
                      std::size_t* fallbacks = nullptr);
// Residuals: 1 - e_i(d(p_i; X)), then the same chain terms.
void stage2_residuals(const std::vector<Eigen::Vector2d>& sensors,
                      const std::vector<EnvelopeInterpolant>& envelopes, const MapState& state,
                      const Eigen::VectorXd& x, Eigen::VectorXd& r, std::size_t* fallbacks = nullptr);

StageResult solve_stage1(const std::vector<Eigen::Vector2d>& sensors,
                         const std::vector<double>& echo, const MapState& initial,
                         const LsqOptions& opts = {});
StageResult solve_stage2(const std::vector<Eigen::Vector2d>& sensors,
                         const std::vector<EnvelopeInterpolant>& envelopes,
                         const MapState& initial, const LsqOptions& opts = {});

// ---- end-to-end mapping on a grid dataset ----

struct MappingConfig {
    int q = 24;
    double reg_alpha = 1e-2;
    KernelModel kernel{KernelKind::RationalQuadratic, 0.06, 100.0};
    double sigma_n = 0.01;
    double init_margin = 0.1;
    bool two_stage = true;  // false: stage 2 alone from the initial circle
    FieldModel field = FieldModel::Ours;
    double echo_threshold = 0.4;
    double echo_prominence = 0.1;
    LsqOptions lsq;
};

struct MappingResult {
    std::vector<double> first_echo;
    MapState initial;
    std::optional<StageResult> stage1;
    StageResult stage2;
};

MappingResult run_mapping(const std::vector<Eigen::Vector2d>& sensors,
                          const std::vector<ugw::EnvelopeSignal>& envelopes,
                          const MappingConfig& cfg);

struct Grid2 {
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Ones();
    int nx = 100;
    int ny = 100;

    [[nodiscard]] Eigen::Vector2d node(int i, int j) const;  // i along x, j along y
};

// Root-mean-square difference between the mapped field and the exact
// distance to the scene boundary over the grid nodes.
double field_rmse(const MapState& state, const ugw::PlateScene& scene, const Grid2& grid);

// Bounding box of the sensor positions sampled with the given node count.
Grid2 sensor_box_grid(const std::vector<Eigen::Vector2d>& sensors, int nx, int ny);

// L(x) = sum_i e_i(|p_i - x|), row-major with x fastest.
std::vector<double> das_map(const std::vector<Eigen::Vector2d>& sensors,
                            const std::vector<ugw::EnvelopeSignal>& envelopes, const Grid2& grid);

}  // namespace revert::mapping
