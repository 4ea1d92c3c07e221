#include "revert/mapping.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip.hpp calls isnan unqualified; later releases qualify it.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "revert/baselines.hpp"
#include "revert/distance.hpp"
#include "revert/parallel.hpp"

namespace revert::mapping {

std::string_view to_string(LsqTermination t) noexcept {
    switch (t) {
        case LsqTermination::CostDecrease: return "cost-decrease";
        case LsqTermination::SmallStep: return "small-step";
        case LsqTermination::MaxIterations: return "max-iterations";
    }
    return "max-iterations";
}

Eigen::MatrixXd forward_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 std::size_t residuals, double step) {
    const auto m = static_cast<Eigen::Index>(residuals);
    Eigen::VectorXd r0(m);
    f(x, r0);
    Eigen::MatrixXd jac(m, x.size());
    parallel_for(static_cast<std::size_t>(x.size()), [&](std::size_t j) {
        Eigen::VectorXd xp = x;
        xp[static_cast<Eigen::Index>(j)] += step;
        Eigen::VectorXd rp(m);
        f(xp, rp);
        jac.col(static_cast<Eigen::Index>(j)) = (rp - r0) / step;
    });
    return jac;
}

Eigen::MatrixXd central_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 std::size_t residuals, double step) {
    const auto m = static_cast<Eigen::Index>(residuals);
    Eigen::MatrixXd jac(m, x.size());
    parallel_for(static_cast<std::size_t>(x.size()), [&](std::size_t j) {
        Eigen::VectorXd xp = x;
        Eigen::VectorXd xm = x;
        xp[static_cast<Eigen::Index>(j)] += step;
        xm[static_cast<Eigen::Index>(j)] -= step;
        Eigen::VectorXd rp(m);
        Eigen::VectorXd rm(m);
        f(xp, rp);
        f(xm, rm);
        jac.col(static_cast<Eigen::Index>(j)) = (rp - rm) / (2.0 * step);
    });
    return jac;
}

LsqReport levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd& x, std::size_t residuals,
                              const LsqOptions& opts) {
    const auto m = static_cast<Eigen::Index>(residuals);
    const Eigen::Index n = x.size();
    Eigen::VectorXd r(m);
    f(x, r);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw std::runtime_error("non-finite cost at the initial point");

    LsqReport report;
    report.initial_cost = cost;
    report.accepted_costs.push_back(cost);

    double mu = -1.0;
    double nu = 2.0;
    Eigen::MatrixXd jac;
    bool need_jacobian = true;
    Eigen::VectorXd trial(n);
    Eigen::VectorXd r_trial(m);
    while (report.iterations < opts.max_iterations) {
        if (need_jacobian) {
            jac = forward_jacobian(f, x, residuals, opts.fd_step);
            ++report.iterations;
            need_jacobian = false;
        }
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (mu < 0.0) mu = opts.initial_damping * std::max(a.diagonal().maxCoeff(), 1e-300);

        Eigen::MatrixXd damped = a;
        damped.diagonal().array() += mu;
        const Eigen::VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite() || step.norm() < opts.step_tol) {
            report.termination = LsqTermination::SmallStep;
            break;
        }
        trial = x + step;
        f(trial, r_trial);
        const double trial_cost = r_trial.squaredNorm();
        const double predicted = -(2.0 * step.dot(g) + step.dot(a * step));
        const double rho = predicted > 0.0 ? (cost - trial_cost) / predicted : -1.0;
        if (std::isfinite(trial_cost) && trial_cost < cost && rho > 0.0) {
            const double decrease = (cost - trial_cost) / std::max(cost, 1e-300);
            x = trial;
            r = r_trial;
            cost = trial_cost;
            report.accepted_costs.push_back(cost);
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
            nu = 2.0;
            need_jacobian = true;
            if (decrease < opts.rel_cost_tol) {
                report.termination = LsqTermination::CostDecrease;
                break;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if (!std::isfinite(mu) || mu > 1e300) {
                report.termination = LsqTermination::SmallStep;
                break;
            }
        }
    }
    report.final_cost = cost;
    if (need_jacobian) jac = forward_jacobian(f, x, residuals, opts.fd_step);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    qr.setThreshold(1e-10);
    report.jacobian_rank = static_cast<int>(qr.rank());
    return report;
}

std::string_view to_string(FieldModel m) noexcept {
    return m == FieldModel::Ours ? "ours" : "loggpis";
}

FieldModel parse_field_model(std::string_view text) {
    if (text == "ours") return FieldModel::Ours;
    if (text == "loggpis") return FieldModel::LogGpis;
    throw std::invalid_argument("unknown field model: " + std::string(text));
}

int default_point_count(double perimeter, double lengthscale) {
    if (!(perimeter > 0.0) || !(lengthscale > 0.0)) {
        throw std::invalid_argument("perimeter and lengthscale must be positive");
    }
    return static_cast<int>(std::ceil(perimeter / (1.5 * lengthscale) - 1e-9));
}

std::vector<Eigen::Vector2d> init_virtual_points(const std::vector<Eigen::Vector2d>& sensors,
                                                 const std::vector<double>& first_echo, int q,
                                                 double margin) {
    if (q < 2) throw std::invalid_argument("at least two virtual points are needed");
    if (sensors.empty() || first_echo.empty()) throw std::invalid_argument("no measurements");
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& s : sensors) centroid += s;
    centroid /= static_cast<double>(sensors.size());
    std::vector<double> sorted = first_echo;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median =
        sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    const double radius = median + margin;
    if (!(radius > 0.0)) throw std::invalid_argument("initial radius must be positive");
    std::vector<Eigen::Vector2d> points;
    points.reserve(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / q;
        points.push_back(centroid + radius * Eigen::Vector2d(std::cos(angle), std::sin(angle)));
    }
    return points;
}

Eigen::VectorXd flatten(const std::vector<Eigen::Vector2d>& points) {
    Eigen::VectorXd x(2 * static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        x[2 * static_cast<Eigen::Index>(i)] = points[i].x();
        x[2 * static_cast<Eigen::Index>(i) + 1] = points[i].y();
    }
    return x;
}

std::vector<Eigen::Vector2d> unflatten(const Eigen::VectorXd& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("parameter vector has odd length");
    std::vector<Eigen::Vector2d> points(static_cast<std::size_t>(x.size() / 2));
    for (std::size_t i = 0; i < points.size(); ++i) {
        points[i] = Eigen::Vector2d(x[2 * static_cast<Eigen::Index>(i)],
                                    x[2 * static_cast<Eigen::Index>(i) + 1]);
    }
    return points;
}

namespace {

PointCloud to_cloud(const std::vector<Eigen::Vector2d>& points) {
    PointCloud cloud(2);
    for (const auto& p : points) cloud.add(std::span<const double>(p.data(), 2));
    return cloud;
}

KernelModel field_kernel(const MapState& state) {
    if (state.field == FieldModel::LogGpis) {
        return KernelModel{KernelKind::Matern32, state.kernel.lengthscale, 1.0};
    }
    return state.kernel;
}

}  // namespace

MapField::MapField(const std::vector<Eigen::Vector2d>& points, const MapState& state)
    : model_(LatentFieldModel::build(to_cloud(points), field_kernel(state), state.sigma_n)),
      field_(state.field) {}

double MapField::distance(const Eigen::Vector2d& p, bool* fell_back) const {
    const std::span<const double> x(p.data(), 2);
    FieldQuery q = field_ == FieldModel::Ours
                       ? query_distance_fast(model_, x)
                       : loggpis_distance(LogGpisModel(model_), x);
    if (fell_back) *fell_back = !q.valid();
    if (q.valid()) return q.d_hat;
    return query_fused(model_, model_.cloud(), x).d_hat;
}

struct EnvelopeInterpolant::Impl {
    boost::math::interpolators::pchip<std::vector<double>> spline;
};

EnvelopeInterpolant::EnvelopeInterpolant(const ugw::EnvelopeSignal& e) {
    if (e.values.size() < 4 || !(e.step > 0.0)) {
        throw std::invalid_argument("envelope needs at least four samples");
    }
    std::vector<double> xs(e.values.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = e.distance(i);
    max_distance_ = xs.back();
    std::vector<double> ys = e.values;
    impl_ = std::make_shared<const Impl>(
        Impl{boost::math::interpolators::pchip<std::vector<double>>(std::move(xs), std::move(ys))});
}

double EnvelopeInterpolant::operator()(double d) const {
    if (!(d >= 0.0) || d > max_distance_) return 0.0;
    return impl_->spline(d);
}

namespace {

void chain_residuals(const std::vector<Eigen::Vector2d>& points, double alpha,
                     Eigen::VectorXd& r, Eigen::Index offset) {
    const double s = std::sqrt(alpha);
    for (std::size_t j = 1; j < points.size(); ++j) {
        r[offset + static_cast<Eigen::Index>(j) - 1] = s * (points[j] - points[j - 1]).norm();
    }
}

std::size_t residual_count(std::size_t measurements, std::size_t q) {
    return measurements + (q > 0 ? q - 1 : 0);
}

}  // namespace

void stage1_residuals(const std::vector<Eigen::Vector2d>& sensors, const std::vector<double>& echo,
                      const MapState& state, const Eigen::VectorXd& x, Eigen::VectorXd& r,
                      std::size_t* fallbacks) {
    const auto points = unflatten(x);
    const MapField field(points, state);
    std::size_t failed = 0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        bool fell_back = false;
        r[static_cast<Eigen::Index>(i)] = echo[i] - field.distance(sensors[i], &fell_back);
        failed += fell_back ? 1 : 0;
    }
    chain_residuals(points, state.reg_alpha, r, static_cast<Eigen::Index>(sensors.size()));
    if (fallbacks) *fallbacks = failed;
}

void stage2_residuals(const std::vector<Eigen::Vector2d>& sensors,
                      const std::vector<EnvelopeInterpolant>& envelopes, const MapState& state,
                      const Eigen::VectorXd& x, Eigen::VectorXd& r, std::size_t* fallbacks) {
    const auto points = unflatten(x);
    const MapField field(points, state);
    std::size_t failed = 0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        bool fell_back = false;
        r[static_cast<Eigen::Index>(i)] = 1.0 - envelopes[i](field.distance(sensors[i], &fell_back));
        failed += fell_back ? 1 : 0;
    }
    chain_residuals(points, state.reg_alpha, r, static_cast<Eigen::Index>(sensors.size()));
    if (fallbacks) *fallbacks = failed;
}

namespace {

template <class Residuals>
StageResult solve_stage(std::size_t measurements, const MapState& initial, const LsqOptions& opts,
                        Residuals residuals) {
    if (initial.points.size() < 2 && initial.reg_alpha > 0.0) {
        throw std::invalid_argument("the chain regularizer needs at least two points");
    }
    if (initial.points.empty()) throw std::invalid_argument("no virtual points");
    const std::size_t m = residual_count(measurements, initial.points.size());
    const ResidualFn f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
        residuals(x, r, nullptr);
    };
    Eigen::VectorXd x = flatten(initial.points);
    StageResult result;
    result.report = levenberg_marquardt(f, x, m, opts);
    result.state = initial;
    result.state.points = unflatten(x);
    Eigen::VectorXd r(static_cast<Eigen::Index>(m));
    residuals(x, r, &result.fallbacks);
    return result;
}

}  // namespace

StageResult solve_stage1(const std::vector<Eigen::Vector2d>& sensors,
                         const std::vector<double>& echo, const MapState& initial,
                         const LsqOptions& opts) {
    if (sensors.size() != echo.size()) throw std::invalid_argument("sensor/echo count mismatch");
    return solve_stage(sensors.size(), initial, opts,
                       [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, std::size_t* fb) {
                           stage1_residuals(sensors, echo, initial, x, r, fb);
                       });
}

StageResult solve_stage2(const std::vector<Eigen::Vector2d>& sensors,
                         const std::vector<EnvelopeInterpolant>& envelopes,
                         const MapState& initial, const LsqOptions& opts) {
    if (sensors.size() != envelopes.size()) {
        throw std::invalid_argument("sensor/envelope count mismatch");
    }
    return solve_stage(sensors.size(), initial, opts,
                       [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, std::size_t* fb) {
                           stage2_residuals(sensors, envelopes, initial, x, r, fb);
                       });
}

MappingResult run_mapping(const std::vector<Eigen::Vector2d>& sensors,
                          const std::vector<ugw::EnvelopeSignal>& envelopes,
                          const MappingConfig& cfg) {
    if (sensors.size() != envelopes.size() || sensors.empty()) {
        throw std::invalid_argument("need one envelope per sensor");
    }
    MappingResult result;
    result.first_echo.resize(sensors.size());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        result.first_echo[i] =
            ugw::first_echo_distance(envelopes[i], cfg.echo_threshold, cfg.echo_prominence);
    }
    result.initial.points = init_virtual_points(sensors, result.first_echo, cfg.q, cfg.init_margin);
    result.initial.reg_alpha = cfg.reg_alpha;
    result.initial.kernel = cfg.kernel;
    result.initial.sigma_n = cfg.sigma_n;
    result.initial.field = cfg.field;

    std::vector<EnvelopeInterpolant> interpolants;
    interpolants.reserve(envelopes.size());
    for (const auto& e : envelopes) interpolants.emplace_back(e);

    MapState start = result.initial;
    if (cfg.two_stage) {
        result.stage1 = solve_stage1(sensors, result.first_echo, start, cfg.lsq);
        start = result.stage1->state;
    }
    result.stage2 = solve_stage2(sensors, interpolants, start, cfg.lsq);
    return result;
}

Eigen::Vector2d Grid2::node(int i, int j) const {
    const double tx = nx > 1 ? static_cast<double>(i) / (nx - 1) : 0.5;
    const double ty = ny > 1 ? static_cast<double>(j) / (ny - 1) : 0.5;
    return Eigen::Vector2d(lo.x() + tx * (hi.x() - lo.x()), lo.y() + ty * (hi.y() - lo.y()));
}

double field_rmse(const MapState& state, const ugw::PlateScene& scene, const Grid2& grid) {
    if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("empty grid");
    const MapField field(state.points, state);
    double sum = 0.0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Eigen::Vector2d p = grid.node(i, j);
            const double err = field.distance(p) - scene.boundary_distance(p);
            sum += err * err;
        }
    }
    return std::sqrt(sum / (static_cast<double>(grid.nx) * grid.ny));
}

Grid2 sensor_box_grid(const std::vector<Eigen::Vector2d>& sensors, int nx, int ny) {
    if (sensors.empty()) throw std::invalid_argument("no sensors");
    Grid2 g;
    g.lo = sensors.front();
    g.hi = sensors.front();
    for (const auto& s : sensors) {
        g.lo = g.lo.cwiseMin(s);
        g.hi = g.hi.cwiseMax(s);
    }
    g.nx = nx;
    g.ny = ny;
    return g;
}

std::vector<double> das_map(const std::vector<Eigen::Vector2d>& sensors,
                            const std::vector<ugw::EnvelopeSignal>& envelopes, const Grid2& grid) {
    if (sensors.size() != envelopes.size()) throw std::invalid_argument("need one envelope per sensor");
    std::vector<double> out(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny), 0.0);
    parallel_for(static_cast<std::size_t>(grid.ny), [&](std::size_t j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Eigen::Vector2d p = grid.node(i, static_cast<int>(j));
            double sum = 0.0;
            for (std::size_t s = 0; s < sensors.size(); ++s) sum += envelopes[s].at((sensors[s] - p).norm());
            out[j * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(i)] = sum;
        }
    });
    return out;
}

}  // namespace revert::mapping
