#include "revert/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "revert/baselines.hpp"
#include "revert/calibrate.hpp"
#include "revert/parallel.hpp"
#include "revert/rng.hpp"

namespace revert::simbench {

double SineEnvironment::y(double x) const {
    double v = offset;
    for (const auto& t : terms) v += t.amplitude * std::sin(t.frequency * x + t.phase);
    return v;
}

double SineEnvironment::slope(double x) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.amplitude * t.frequency * std::cos(t.frequency * x + t.phase);
    return v;
}

double SineEnvironment::arc_length() const {
    const int n = 4096;  // even
    const double h = (x_max - x_min) / n;
    auto f = [&](double x) { return std::hypot(1.0, slope(x)); };
    double s = f(x_min) + f(x_max);
    for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(x_min + i * h);
    return s * h / 3.0;
}

SineEnvironment generate_environment(std::uint64_t seed, const EnvironmentSpec& spec) {
    if (spec.min_terms < 0 || spec.max_terms < spec.min_terms || !(spec.workspace > 0.0)) {
        throw std::invalid_argument("invalid environment specification");
    }
    Rng rng = make_rng(seed, "environment");
    std::uniform_int_distribution<int> count(spec.min_terms, spec.max_terms);
    std::uniform_real_distribution<double> amp(spec.min_amplitude, spec.max_amplitude);
    std::uniform_real_distribution<double> freq(spec.min_frequency, spec.max_frequency);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    SineEnvironment env;
    env.seed = seed;
    env.x_min = 0.0;
    env.x_max = spec.workspace;
    env.offset = 0.5 * spec.workspace;
    const int n = count(rng);
    for (int j = 0; j < n; ++j) {
        SineTerm t;
        t.amplitude = amp(rng);
        t.frequency = freq(rng);
        t.phase = phase(rng);
        env.terms.push_back(t);
    }
    return env;
}

PointCloud sample_cloud(const SineEnvironment& env, double gap, double noise_sd,
                        std::uint64_t seed) {
    if (!(gap > 0.0)) throw std::invalid_argument("sample gap must be positive");
    if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise sd must be non-negative");
    // Cumulative arc length on a fine x grid, inverted by linear interpolation.
    const int n = 20000;
    const double h = (env.x_max - env.x_min) / n;
    std::vector<double> s(n + 1, 0.0);
    double prev = std::hypot(1.0, env.slope(env.x_min));
    for (int i = 1; i <= n; ++i) {
        const double cur = std::hypot(1.0, env.slope(env.x_min + i * h));
        s[i] = s[i - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    Rng rng = make_rng(seed, "sample-noise");
    std::normal_distribution<double> noise(0.0, 1.0);
    PointCloud cloud(2);
    for (double target = 0.0; target <= s[n]; target += gap) {
        const auto it = std::lower_bound(s.begin(), s.end(), target);
        const auto i = static_cast<int>(std::distance(s.begin(), it));
        double x = env.x_min;
        if (i > 0) {
            const double t = (target - s[i - 1]) / (s[i] - s[i - 1]);
            x = env.x_min + (i - 1 + t) * h;
        }
        double p[2] = {x, env.y(x)};
        if (noise_sd > 0.0) {
            p[0] += noise_sd * noise(rng);
            p[1] += noise_sd * noise(rng);
        }
        cloud.add(p);
    }
    return cloud;
}

GroundTruthOracle::GroundTruthOracle(const SineEnvironment& env, double delta) : delta_(delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("oracle spacing must be positive");
    double x = env.x_min;
    while (x < env.x_max) {
        xs_.push_back(x);
        ys_.push_back(env.y(x));
        // 1% margin keeps the arc step below delta as the slope drifts within a step.
        x += 0.99 * delta / std::hypot(1.0, env.slope(x));
    }
    xs_.push_back(env.x_max);
    ys_.push_back(env.y(env.x_max));

    const std::size_t stride = 100;
    for (std::size_t i = 0; i < xs_.size(); i += stride) {
        coarse_xs_.push_back(xs_[i]);
        coarse_ys_.push_back(ys_[i]);
    }
    coarse_xs_.push_back(xs_.back());
    coarse_ys_.push_back(ys_.back());
    coarse_spacing_ = static_cast<double>(stride) * delta;

    x0_ = env.x_min;
    bucket_width_ = 0.01 * (env.x_max - env.x_min);
    const auto buckets = static_cast<std::size_t>(
        std::ceil((env.x_max - env.x_min) / bucket_width_)) + 2;
    bucket_start_.resize(buckets + 1);
    for (std::size_t b = 0; b <= buckets; ++b) {
        const double edge = x0_ + static_cast<double>(b) * bucket_width_;
        bucket_start_[b] = static_cast<std::size_t>(
            std::distance(xs_.begin(), std::lower_bound(xs_.begin(), xs_.end(), edge)));
    }
}

simd::MinResult GroundTruthOracle::search(double x, double y) const {
    const auto& kernels = simd::active();
    const auto coarse =
        kernels.min_squared_distance_2d(coarse_xs_.data(), coarse_ys_.data(), coarse_xs_.size(), x, y);
    // Every fine sample closer than the best coarse one lies within this x window.
    const double bound = std::sqrt(coarse.value);
    const auto last = static_cast<double>(bucket_start_.size() - 1);
    const double lo_b = std::clamp(std::floor((x - bound - x0_) / bucket_width_), 0.0, last);
    const double hi_b = std::clamp(std::ceil((x + bound - x0_) / bucket_width_) + 1.0, 0.0, last);
    const std::size_t lo = bucket_start_[static_cast<std::size_t>(lo_b)];
    const std::size_t hi = std::max(bucket_start_[static_cast<std::size_t>(hi_b)], lo + 1);
    const std::size_t end = std::min(hi, xs_.size());
    auto best = kernels.min_squared_distance_2d(xs_.data() + lo, ys_.data() + lo, end - lo, x, y);
    best.index += lo;
    return best;
}

double GroundTruthOracle::distance(double x, double y) const {
    return std::sqrt(search(x, y).value);
}

std::size_t GroundTruthOracle::nearest_index(double x, double y) const {
    return search(x, y).index;
}

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::OursSe: return "ours-se";
        case Method::OursRq: return "ours-rq";
        case Method::OursMatern: return "ours-matern";
        case Method::LogGpis: return "loggpis";
        case Method::SmoothMin: return "smoothmin";
        case Method::Fused: return "fused";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    for (const Method m : all_methods()) {
        if (to_string(m) == text) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::OursSe,  Method::OursRq,
                                             Method::OursMatern, Method::LogGpis,
                                             Method::SmoothMin, Method::Fused};
    return methods;
}

namespace {

KernelModel kernel_for(const BenchConfig& config, KernelKind kind) {
    KernelModel k;
    k.kind = kind;
    k.lengthscale = config.lengthscale;
    k.rq_alpha = config.rq_alpha;
    return k;
}

struct Accumulator {
    double close_sq = 0.0, far_sq = 0.0;
    long close_n = 0, far_n = 0, failed = 0;

    void add(double truth, double estimate) {
        if (!std::isfinite(estimate)) {
            ++failed;
            return;
        }
        const double e = estimate - truth;
        if (truth < kCloseRangeSplit) {
            close_sq += e * e;
            ++close_n;
        } else {
            far_sq += e * e;
            ++far_n;
        }
    }

    [[nodiscard]] MethodStats stats() const {
        MethodStats s;
        s.close_count = close_n;
        s.far_count = far_n;
        s.close_rmse = close_n > 0 ? std::sqrt(close_sq / close_n) : NAN;
        s.far_rmse = far_n > 0 ? std::sqrt(far_sq / far_n) : NAN;
        const long valid = close_n + far_n;
        s.full_rmse = valid > 0 ? std::sqrt((close_sq + far_sq) / valid) : NAN;
        s.coverage = static_cast<double>(valid) / static_cast<double>(valid + failed);
        return s;
    }
};

// Every method evaluated at one query; NaN marks a failure.
class MethodSet {
public:
    MethodSet(const BenchConfig& config, const std::map<KernelKind, double>& sigma_n,
              double loggpis_sigma_n, const PointCloud& cloud)
        : config_(config), cloud_(cloud) {
        auto need = [&](Method m) {
            return std::find(config.methods.begin(), config.methods.end(), m) !=
                   config.methods.end();
        };
        auto model_for = [&](KernelKind kind) -> const LatentFieldModel& {
            auto it = models_.find(kind);
            if (it == models_.end()) {
                it = models_
                         .emplace(kind, LatentFieldModel::build(cloud, kernel_for(config, kind),
                                                                sigma_n.at(kind)))
                         .first;
            }
            return it->second;
        };
        if (need(Method::OursSe)) model_for(KernelKind::SquaredExponential);
        if (need(Method::OursRq)) model_for(KernelKind::RationalQuadratic);
        if (need(Method::OursMatern)) model_for(KernelKind::Matern32);
        if (need(Method::Fused)) model_for(config.fused_kernel);
        if (need(Method::LogGpis)) {
            loggpis_.emplace(LogGpisModel::build(cloud, config.lengthscale, loggpis_sigma_n));
        }
    }

    [[nodiscard]] double evaluate(Method m, std::span<const double> x) const {
        switch (m) {
            case Method::OursSe: return gp(KernelKind::SquaredExponential, x);
            case Method::OursRq: return gp(KernelKind::RationalQuadratic, x);
            case Method::OursMatern: return gp(KernelKind::Matern32, x);
            case Method::LogGpis: {
                const auto q = loggpis_distance(*loggpis_, x);
                return q.valid() ? q.d_hat : NAN;
            }
            case Method::SmoothMin: return smooth_min(cloud_, x, config_.smooth_min_lambda);
            case Method::Fused: {
                FusionParams p = config_.fusion;
                p.lambda = config_.smooth_min_lambda;
                const auto q = query_fused(models_.at(config_.fused_kernel), cloud_, x, p);
                return q.valid() ? q.d_hat : NAN;
            }
        }
        return NAN;
    }

private:
    [[nodiscard]] double gp(KernelKind kind, std::span<const double> x) const {
        const auto q = query_distance_fast(models_.at(kind), x);
        return q.valid() ? q.d_hat : NAN;
    }

    const BenchConfig& config_;
    const PointCloud& cloud_;
    std::map<KernelKind, LatentFieldModel> models_;
    std::optional<LogGpisModel> loggpis_;
};

}  // namespace

CalibrationScene calibration_scene(const BenchConfig& config) {
    const auto env = generate_environment(derive_seed(config.seed, "calibration"), config.environment);
    CalibrationScene scene;
    scene.cloud =
        sample_cloud(env, config.gap, config.noise_sd, derive_seed(config.seed, "calibration-cloud"));
    scene.grid = PointCloud(2);
    const GroundTruthOracle oracle(env, config.oracle_delta);
    const double l = config.lengthscale;
    const double step = 0.5 * l;
    const double w = config.environment.workspace;
    for (double y = 0.5 * step; y < w; y += step) {
        for (double x = 0.5 * step; x < w; x += step) {
            const double d = oracle.distance(x, y);
            if (d <= 3.0 * l) {
                const double p[2] = {x, y};
                scene.grid.add(p);
                scene.gt_distances.push_back(d);
            }
        }
    }
    return scene;
}

double calibrate_kernel_noise(const BenchConfig& config, KernelKind kind) {
    const auto scene = calibration_scene(config);
    return learn_sigma_n(scene.cloud, kernel_for(config, kind), scene.grid, scene.gt_distances)
        .sigma_n;
}

double calibrate_loggpis_noise(const BenchConfig& config) {
    const auto scene = calibration_scene(config);
    const double rate = std::sqrt(3.0) / config.lengthscale;
    std::vector<double> targets(scene.gt_distances.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        targets[i] = std::exp(-rate * scene.gt_distances[i]);
    }
    return learn_sigma_n_for_targets(scene.cloud, kernel_for(config, KernelKind::Matern32),
                                     scene.grid, targets)
        .sigma_n;
}

BenchReport run_benchmark(const BenchConfig& config) {
    if (config.envs < 1 || config.queries < 1) {
        throw std::invalid_argument("benchmark needs at least one environment and one query");
    }
    if (config.methods.empty()) throw std::invalid_argument("benchmark needs at least one method");
    BenchReport report;
    report.config = config;
    const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(config.queries))));
    report.grid_side = side;

    std::vector<KernelKind> kinds;
    for (const Method m : config.methods) {
        if (m == Method::OursSe) kinds.push_back(KernelKind::SquaredExponential);
        if (m == Method::OursRq) kinds.push_back(KernelKind::RationalQuadratic);
        if (m == Method::OursMatern) kinds.push_back(KernelKind::Matern32);
        if (m == Method::Fused) kinds.push_back(config.fused_kernel);
    }
    for (const KernelKind kind : kinds) {
        if (report.sigma_n.count(kind) != 0) continue;
        const auto it = config.sigma_n.find(kind);
        report.sigma_n[kind] =
            it != config.sigma_n.end() ? it->second : calibrate_kernel_noise(config, kind);
    }

    const bool need_loggpis = std::find(config.methods.begin(), config.methods.end(),
                                        Method::LogGpis) != config.methods.end();
    if (need_loggpis) {
        report.loggpis_sigma_n = config.loggpis_sigma_n ? *config.loggpis_sigma_n
                                                        : calibrate_loggpis_noise(config);
    }

    const auto envs = static_cast<std::size_t>(config.envs);
    const int per_env_scatter = config.scatter_samples / config.envs;
    report.environments.resize(envs);
    std::vector<std::vector<ScatterRow>> scatter(envs);
    const double w = config.environment.workspace;
    const double cell = w / side;

    parallel_for(envs, [&](std::size_t e) {
        const auto env = generate_environment(derive_seed(config.seed, "environment", e),
                                              config.environment);
        const auto cloud =
            sample_cloud(env, config.gap, config.noise_sd, derive_seed(config.seed, "cloud", e));
        const GroundTruthOracle oracle(env, config.oracle_delta);
        const MethodSet methods(config, report.sigma_n, report.loggpis_sigma_n, cloud);

        std::vector<char> in_scatter(static_cast<std::size_t>(side) * side, 0);
        {
            Rng rng = make_rng(config.seed, "scatter", e);
            std::vector<std::size_t> idx(in_scatter.size());
            std::iota(idx.begin(), idx.end(), 0);
            const auto k = std::min<std::size_t>(per_env_scatter, idx.size());
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
                std::swap(idx[i], idx[pick(rng)]);
                in_scatter[idx[i]] = 1;
            }
        }

        std::vector<Accumulator> acc(config.methods.size());
        for (int iy = 0; iy < side; ++iy) {
            for (int ix = 0; ix < side; ++ix) {
                const double x[2] = {(ix + 0.5) * cell, (iy + 0.5) * cell};
                const double truth = oracle.distance(x[0], x[1]);
                const bool keep = in_scatter[static_cast<std::size_t>(iy) * side + ix] != 0;
                ScatterRow row;
                for (std::size_t m = 0; m < config.methods.size(); ++m) {
                    const double est = methods.evaluate(config.methods[m], x);
                    acc[m].add(truth, est);
                    if (keep) row.error[config.methods[m]] = est - truth;
                }
                if (keep) {
                    row.env = static_cast<int>(e);
                    row.x = x[0];
                    row.y = x[1];
                    row.true_distance = truth;
                    scatter[e].push_back(std::move(row));
                }
            }
        }
        auto& result = report.environments[e];
        result.seed = env.seed;
        result.cloud_size = cloud.size();
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            result.stats[config.methods[m]] = acc[m].stats();
        }
    });

    for (auto& rows : scatter) {
        for (auto& row : rows) report.scatter.push_back(std::move(row));
    }
    for (const Method m : config.methods) {
        MethodStats mean;
        int close_n = 0, far_n = 0, full_n = 0;
        for (const auto& env : report.environments) {
            const auto& s = env.stats.at(m);
            if (std::isfinite(s.close_rmse)) {
                mean.close_rmse += s.close_rmse;
                ++close_n;
            }
            if (std::isfinite(s.far_rmse)) {
                mean.far_rmse += s.far_rmse;
                ++far_n;
            }
            if (std::isfinite(s.full_rmse)) {
                mean.full_rmse += s.full_rmse;
                ++full_n;
            }
            mean.coverage += s.coverage;
            mean.close_count += s.close_count;
            mean.far_count += s.far_count;
        }
        mean.close_rmse = close_n > 0 ? mean.close_rmse / close_n : NAN;
        mean.far_rmse = far_n > 0 ? mean.far_rmse / far_n : NAN;
        mean.full_rmse = full_n > 0 ? mean.full_rmse / full_n : NAN;
        mean.coverage /= static_cast<double>(report.environments.size());
        report.mean[m] = mean;
    }
    return report;
}

Profile smoothed_profile(std::vector<double> distance, std::vector<double> abs_error, int window) {
    if (distance.size() != abs_error.size()) throw std::invalid_argument("profile size mismatch");
    if (window < 1) throw std::invalid_argument("profile window must be positive");
    std::vector<std::size_t> order(distance.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return distance[a] < distance[b]; });
    Profile p;
    const auto n = order.size();
    const auto wn = static_cast<std::size_t>(window);
    if (n < wn) return p;
    double sd = 0.0, se = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sd += distance[order[i]];
        se += abs_error[order[i]];
        if (i >= wn) {
            sd -= distance[order[i - wn]];
            se -= abs_error[order[i - wn]];
        }
        if (i + 1 >= wn) {
            p.distance.push_back(sd / window);
            p.error.push_back(se / window);
        }
    }
    return p;
}

LogFit fit_log1p(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs matching data");
    auto solve = [&](double b, double& a) {
        double gg = 0.0, gy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double g = std::log1p(b * x[i]);
            gg += g * g;
            gy += g * y[i];
        }
        a = gg > 0.0 ? gy / gg : 0.0;
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - a * std::log1p(b * x[i]);
            sse += r * r;
        }
        return sse;
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = -3.0, hi = 5.0, a = 0.0;
    double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
    double fc = solve(std::pow(10.0, c), a), fd = solve(std::pow(10.0, d), a);
    while (hi - lo > 1e-6) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = solve(std::pow(10.0, c), a);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = solve(std::pow(10.0, d), a);
        }
    }
    LogFit fit;
    fit.b = std::pow(10.0, 0.5 * (lo + hi));
    const double sse = solve(fit.b, fit.a);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sst = 0.0;
    for (const double v : y) sst += (v - mean) * (v - mean);
    fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : 0.0;
    return fit;
}

}  // namespace revert::simbench
