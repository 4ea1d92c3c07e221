#include "revert/echoloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "revert/distance.hpp"
#include "revert/parallel.hpp"

namespace revert::echoloc {

std::string_view to_string(OracleKind kind) noexcept {
    switch (kind) {
        case OracleKind::GpField: return "ours";
        case OracleKind::LogGpis: return "loggpis";
        case OracleKind::RectAnalytic: return "rect";
    }
    return "ours";
}

OracleKind parse_oracle(std::string_view text) {
    for (OracleKind k : {OracleKind::GpField, OracleKind::LogGpis, OracleKind::RectAnalytic}) {
        if (to_string(k) == text) return k;
    }
    throw std::invalid_argument("unknown distance oracle: " + std::string(text));
}

void FilterConfig::validate() const {
    if (n_particles < 1) throw std::invalid_argument("n_particles must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
    if (resample_interval < 1) throw std::invalid_argument("resample_interval must be positive");
    if (!(odom_noise_sd >= 0.0)) throw std::invalid_argument("odom_noise_sd must be non-negative");
    if (!(estimate_quantile > 0.0 && estimate_quantile <= 1.0)) {
        throw std::invalid_argument("estimate_quantile must lie in (0, 1]");
    }
}

double GpFieldOracle::distance(const Eigen::Vector2d& p) const {
    return query_distance_fast(model_, std::span<const double>(p.data(), 2)).d_hat;
}

double LogGpisOracle::distance(const Eigen::Vector2d& p) const {
    return loggpis_distance(model_, std::span<const double>(p.data(), 2)).d_hat;
}

double PolygonOracle::distance(const Eigen::Vector2d& p) const {
    return scene_.boundary_distance(p);
}

PointCloud boundary_samples(const ugw::PlateScene& scene, double gap) {
    if (!(gap > 0.0)) throw std::invalid_argument("boundary gap must be positive");
    const auto& poly = scene.polygon();
    PointCloud cloud(2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Eigen::Vector2d a = poly[i];
        const Eigen::Vector2d b = poly[(i + 1) % poly.size()];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / gap - 1e-9)));
        for (int j = 0; j < n; ++j) {
            const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(j) / n);
            cloud.add(std::span<const double>(p.data(), 2));
        }
    }
    return cloud;
}

std::unique_ptr<DistanceOracle> make_oracle(OracleKind kind, const ugw::PlateScene& scene,
                                            const OracleParams& params) {
    switch (kind) {
        case OracleKind::GpField: {
            KernelModel kernel{KernelKind::RationalQuadratic, params.lengthscale, params.rq_alpha};
            return std::make_unique<GpFieldOracle>(LatentFieldModel::build(
                boundary_samples(scene, params.boundary_gap), kernel, params.sigma_n));
        }
        case OracleKind::LogGpis:
            return std::make_unique<LogGpisOracle>(LogGpisModel::build(
                boundary_samples(scene, params.boundary_gap), params.lengthscale, params.sigma_n));
        case OracleKind::RectAnalytic:
            return std::make_unique<PolygonOracle>(scene);
    }
    throw std::invalid_argument("unknown distance oracle");
}

std::vector<Particle> initialize(const ugw::PlateScene& scene, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("particle count must be positive");
    Eigen::Vector2d lo = scene.polygon().front();
    Eigen::Vector2d hi = lo;
    for (const auto& v : scene.polygon()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    std::uniform_real_distribution<double> ux(lo.x(), hi.x());
    std::uniform_real_distribution<double> uy(lo.y(), hi.y());
    std::vector<Particle> out(static_cast<std::size_t>(n));
    for (auto& p : out) {
        do {
            p.position = Eigen::Vector2d(ux(rng), uy(rng));
        } while (!scene.contains(p.position));
        p.weight = 1.0 / n;
    }
    return out;
}

void motion_update(std::vector<Particle>& particles, const Eigen::Vector2d& odom_delta,
                   const FilterConfig& cfg, Rng& rng) {
    if (cfg.odom_noise_sd == 0.0) {
        for (auto& p : particles) p.position += odom_delta;
        return;
    }
    std::normal_distribution<double> noise(0.0, cfg.odom_noise_sd);
    for (auto& p : particles) {
        const double nx = noise(rng);
        const double ny = noise(rng);
        p.position += odom_delta + Eigen::Vector2d(nx, ny);
    }
}

bool measurement_update(std::vector<Particle>& particles, const ugw::EnvelopeSignal& e,
                        const DistanceOracle& oracle, const FilterConfig& cfg,
                        const ugw::PlateScene& scene, Rng& rng) {
    std::vector<double> log_w(particles.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < particles.size(); ++i) {
        const double d = oracle.distance(particles[i].position);
        const double ev = std::isfinite(d) ? e.at(d) : 0.0;
        log_w[i] = particles[i].weight > 0.0 ? std::log(particles[i].weight) + cfg.beta * ev
                                             : -std::numeric_limits<double>::infinity();
        max_log = std::max(max_log, log_w[i]);
    }
    if (!std::isfinite(max_log)) {
        particles = initialize(scene, static_cast<int>(particles.size()), rng);
        return false;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        particles[i].weight = std::exp(log_w[i] - max_log);
        total += particles[i].weight;
    }
    for (auto& p : particles) p.weight /= total;
    return true;
}

void resample(std::vector<Particle>& particles, Rng& rng) {
    const std::size_t n = particles.size();
    if (n == 0) return;
    std::uniform_real_distribution<double> u(0.0, 1.0 / static_cast<double>(n));
    const double start = u(rng);
    std::vector<Particle> out(n);
    double cumulative = particles[0].weight;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = start + static_cast<double>(i) / static_cast<double>(n);
        while (target > cumulative && j + 1 < n) cumulative += particles[++j].weight;
        out[i].position = particles[j].position;
        out[i].weight = 1.0 / static_cast<double>(n);
    }
    particles = std::move(out);
}

Eigen::Vector2d estimate(const std::vector<Particle>& particles, double q) {
    if (particles.empty()) throw std::invalid_argument("no particles");
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in (0, 1]");
    const std::size_t n = particles.size();
    const auto keep = std::min(
        n, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return particles[a].weight > particles[b].weight;
    });
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < keep; ++i) sum += particles[order[i]].position;
    return sum / static_cast<double>(keep);
}

std::vector<Step> random_walk(int rows, int cols,
                              const std::vector<Eigen::Vector2d>& positions, int steps,
                              double odom_noise_sd, std::uint64_t seed) {
    if (rows < 1 || cols < 1 || steps < 1) throw std::invalid_argument("invalid walk size");
    if (positions.size() != static_cast<std::size_t>(rows * cols)) {
        throw std::invalid_argument("position count does not match the grid");
    }
    Rng rng = make_rng(seed, "walk");
    std::uniform_int_distribution<int> pick_start(0, rows * cols - 1);
    std::normal_distribution<double> noise(0.0, odom_noise_sd > 0.0 ? odom_noise_sd : 1.0);
    int cell = pick_start(rng);
    std::vector<Step> walk;
    walk.reserve(static_cast<std::size_t>(steps));
    walk.push_back({Eigen::Vector2d::Zero(), static_cast<std::size_t>(cell), positions[cell]});
    static constexpr int kMoves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (static_cast<int>(walk.size()) < steps) {
        const int r = cell / cols;
        const int c = cell % cols;
        int options[4];
        int count = 0;
        for (int m = 0; m < 4; ++m) {
            const int nr = r + kMoves[m][1];
            const int nc = c + kMoves[m][0];
            if (nr >= 0 && nr < rows && nc >= 0 && nc < cols) options[count++] = nr * cols + nc;
        }
        if (count == 0) throw std::invalid_argument("grid has no neighbours to walk to");
        const int next = options[std::uniform_int_distribution<int>(0, count - 1)(rng)];
        Eigen::Vector2d delta = positions[next] - positions[cell];
        if (odom_noise_sd > 0.0) {
            const double nx = noise(rng);
            const double ny = noise(rng);
            delta += Eigen::Vector2d(nx, ny);
        }
        cell = next;
        walk.push_back({delta, static_cast<std::size_t>(cell), positions[cell]});
    }
    return walk;
}

FilterRun run_filter(const std::vector<Step>& trajectory, const ugw::MeasurementSet& measurements,
                     const ugw::PlateScene& scene, const DistanceOracle& oracle,
                     const FilterConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng = make_rng(seed, "filter");
    auto particles = initialize(scene, cfg.n_particles, rng);
    FilterRun run;
    run.estimates.reserve(trajectory.size());
    run.errors.reserve(trajectory.size());
    for (std::size_t s = 0; s < trajectory.size(); ++s) {
        const Step& step = trajectory[s];
        if (step.measurement >= measurements.envelopes.size()) {
            throw std::out_of_range("trajectory refers to a missing measurement");
        }
        if (s > 0) motion_update(particles, step.odom_delta, cfg, rng);
        if (!measurement_update(particles, measurements.envelopes[step.measurement], oracle, cfg,
                                scene, rng)) {
            ++run.divergences;
        }
        const Eigen::Vector2d est = estimate(particles, cfg.estimate_quantile);
        run.estimates.push_back(est);
        run.errors.push_back((est - step.truth).norm());
        if ((s + 1) % static_cast<std::size_t>(cfg.resample_interval) == 0) resample(particles, rng);
    }
    return run;
}

std::vector<std::vector<Step>> make_trajectories(const ugw::GridDataset& data,
                                                 const ExperimentConfig& cfg) {
    std::vector<std::vector<Step>> out(static_cast<std::size_t>(cfg.trajectories));
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = random_walk(data.spec.rows, data.spec.cols, data.measurements.positions, cfg.steps,
                             cfg.walk_odom_noise_sd, derive_seed(cfg.seed, "trajectory", t));
    }
    return out;
}

ExperimentResult run_experiment(const ugw::GridDataset& data,
                                const std::vector<std::vector<Step>>& trajectories,
                                OracleKind oracle, const ExperimentConfig& cfg) {
    const auto field = make_oracle(oracle, data.scene, cfg.oracle);
    ExperimentResult result;
    result.oracle = oracle;
    result.runs.resize(trajectories.size());
    parallel_for(trajectories.size(), [&](std::size_t t) {
        result.runs[t] = run_filter(trajectories[t], data.measurements, data.scene, *field,
                                    cfg.filter, derive_seed(cfg.seed, "filter", t));
    });
    result.converged_median = converged_median(result.runs, cfg.burn_in);
    return result;
}

double converged_median(const std::vector<FilterRun>& runs, int burn_in) {
    std::vector<double> errors;
    for (const auto& run : runs) {
        for (std::size_t s = static_cast<std::size_t>(std::max(0, burn_in)); s < run.errors.size(); ++s) {
            errors.push_back(run.errors[s]);
        }
    }
    if (errors.empty()) throw std::invalid_argument("no errors after burn-in");
    const std::size_t mid = errors.size() / 2;
    std::nth_element(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(mid), errors.end());
    const double upper = errors[mid];
    if (errors.size() % 2 == 1) return upper;
    const double lower = *std::max_element(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace revert::echoloc
