#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "revert/baselines.hpp"
#include "revert/calibrate.hpp"
#include "revert/distance.hpp"
#include "revert/parallel.hpp"
#include "revert/simbench.hpp"

namespace revert::cli {

std::pair<int, int> parse_grid_size(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(text);
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const int a = std::stoi(text.substr(0, x), &used_a);
        const int b = std::stoi(text.substr(x + 1), &used_b);
        if (used_a != x || used_b != text.size() - x - 1 || a < 1 || b < 1) throw std::invalid_argument(text);
        return {a, b};
    } catch (const std::exception&) {
        throw ConfigError("grid size must look like 200x150, got '" + text + "'");
    }
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("expected a comma-separated number list, got '" + text + "'");
        }
    }
    return out;
}

namespace {

// Runs f, reporting invalid settings as configuration errors.
template <class F>
auto checked(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json stats_json(const simbench::MethodStats& s) {
    return {{"close_rmse", s.close_rmse}, {"far_rmse", s.far_rmse},   {"full_rmse", s.full_rmse},
            {"coverage", s.coverage},     {"close_count", s.close_count}, {"far_count", s.far_count}};
}

// ---------------------------------------------------------------- bench-distance

class BenchDistance final : public Command {
public:
    std::string name() const override { return "bench-distance"; }
    std::string description() const override {
        return "Benchmark distance fields on random sum-of-sines environments";
    }

    void declare(Settings& s) override {
        s.add("seed", &cfg_.seed, "master seed");
        s.add("envs", &cfg_.envs, "number of environments");
        s.add("queries", &cfg_.queries, "queries per environment (rounded to a square grid)");
        s.add("methods", &methods_, "comma-separated methods or 'all'");
        s.add("gap", &cfg_.gap, "surface sample spacing, m");
        s.add("noise_sd", &cfg_.noise_sd, "sample positional noise sd, m");
        s.add("lengthscale", &cfg_.lengthscale, "kernel lengthscale, m");
        s.add("rq_alpha", &cfg_.rq_alpha, "rational quadratic shape");
        s.add("smooth_min_lambda", &cfg_.smooth_min_lambda, "smooth-minimum sharpness (< 0)");
        s.add("fusion.center_factor", &cfg_.fusion.center_factor, "fusion blend centre, lengthscales");
        s.add("fusion.width_factor", &cfg_.fusion.width_factor, "fusion blend width, lengthscales");
        s.add("fusion.lambda", &cfg_.fusion.lambda, "fusion smooth-minimum sharpness");
        s.add("fused_kernel", &fused_kernel_, "kernel of the fused field's GP part");
        s.add("oracle_delta", &cfg_.oracle_delta, "ground-truth sample spacing, m");
        s.add("scatter_samples", &cfg_.scatter_samples, "error-vs-distance samples per run");
        s.add("environment.min_terms", &cfg_.environment.min_terms, "fewest sine terms");
        s.add("environment.max_terms", &cfg_.environment.max_terms, "most sine terms");
        s.add("environment.min_amplitude", &cfg_.environment.min_amplitude, "m");
        s.add("environment.max_amplitude", &cfg_.environment.max_amplitude, "m");
        s.add("environment.min_frequency", &cfg_.environment.min_frequency, "rad/m");
        s.add("environment.max_frequency", &cfg_.environment.max_frequency, "rad/m");
        s.add("environment.workspace", &cfg_.environment.workspace, "square workspace side, m");
        s.add("sigma_n.se", &sigma_se_, "SE corrective noise; negative calibrates");
        s.add("sigma_n.rq", &sigma_rq_, "RQ corrective noise; negative calibrates");
        s.add("sigma_n.matern", &sigma_matern_, "Matern corrective noise; negative calibrates");
        s.add("sigma_n.loggpis", &sigma_loggpis_, "LogGPIS corrective noise; negative calibrates");
        s.add("profile_window", &profile_window_, "moving-average window of the LogGPIS profile");
        s.add("out", &out_, "report JSON path", true);
        s.add("scatter", &scatter_, "optional error-vs-distance CSV path");
    }

    int run(const Settings& s) override {
        checked([&] {
            cfg_.methods.clear();
            if (methods_ == "all") {
                cfg_.methods = simbench::all_methods();
            } else {
                std::stringstream ss(methods_);
                std::string item;
                while (std::getline(ss, item, ',')) cfg_.methods.push_back(simbench::parse_method(item));
            }
            cfg_.fused_kernel = parse_kernel_kind(fused_kernel_);
            if (cfg_.envs < 1 || cfg_.queries < 1) throw std::invalid_argument("envs and queries must be positive");
            if (profile_window_ < 1) throw std::invalid_argument("profile_window must be positive");
            return 0;
        });
        if (sigma_se_ >= 0) cfg_.sigma_n[KernelKind::SquaredExponential] = sigma_se_;
        if (sigma_rq_ >= 0) cfg_.sigma_n[KernelKind::RationalQuadratic] = sigma_rq_;
        if (sigma_matern_ >= 0) cfg_.sigma_n[KernelKind::Matern32] = sigma_matern_;
        if (sigma_loggpis_ >= 0) cfg_.loggpis_sigma_n = sigma_loggpis_;

        const auto report = simbench::run_benchmark(cfg_);

        nlohmann::json doc;
        doc["grid_side"] = report.grid_side;
        doc["close_range_split"] = simbench::kCloseRangeSplit;
        for (const auto& [kind, v] : report.sigma_n) doc["sigma_n"][std::string(to_string(kind))] = v;
        doc["sigma_n"]["loggpis"] = report.loggpis_sigma_n;
        for (const auto& [m, st] : report.mean) doc["mean"][std::string(simbench::to_string(m))] = stats_json(st);
        nlohmann::json envs = nlohmann::json::array();
        for (const auto& e : report.environments) {
            nlohmann::json j;
            j["seed"] = e.seed;
            j["cloud_size"] = e.cloud_size;
            for (const auto& [m, st] : e.stats) j["stats"][std::string(simbench::to_string(m))] = stats_json(st);
            envs.push_back(j);
        }
        doc["environments"] = envs;

        // Smoothed LogGPIS error profile and its log(1 + x) fit.
        std::vector<double> dist;
        std::vector<double> err;
        for (const auto& row : report.scatter) {
            const auto it = row.error.find(simbench::Method::LogGpis);
            if (it == row.error.end() || !std::isfinite(it->second)) continue;
            dist.push_back(row.true_distance);
            err.push_back(std::abs(it->second));
        }
        if (static_cast<int>(dist.size()) >= profile_window_ + 1) {
            const auto profile = simbench::smoothed_profile(dist, err, profile_window_);
            const auto fit = simbench::fit_log1p(profile.distance, profile.error);
            doc["loggpis_profile"] = {{"a", fit.a}, {"b", fit.b}, {"r_squared", fit.r_squared},
                                      {"distance", profile.distance}, {"abs_error", profile.error}};
        }
        std::vector<std::filesystem::path> outputs = {out_};
        write_json(out_, doc);

        if (!scatter_.empty()) {
            std::ofstream csv(scatter_, std::ios::binary);
            csv << "env,x,y,true_distance";
            for (auto m : cfg_.methods) csv << ',' << simbench::to_string(m);
            csv << '\n';
            for (const auto& row : report.scatter) {
                csv << row.env << ',' << format_double(row.x) << ',' << format_double(row.y) << ','
                    << format_double(row.true_distance);
                for (auto m : cfg_.methods) {
                    const auto it = row.error.find(m);
                    csv << ',' << format_double(it == row.error.end() ? std::nan("") : it->second);
                }
                csv << '\n';
            }
            if (!csv) throw std::runtime_error("cannot write " + scatter_);
            outputs.emplace_back(scatter_);
        }
        write_manifest(manifest_path(out_, false), name(), cfg_.seed, s.resolved(), outputs);

        for (const auto& [m, st] : report.mean) {
            std::cout << simbench::to_string(m) << ": close " << st.close_rmse << " far " << st.far_rmse
                      << " coverage " << st.coverage << '\n';
        }
        return 0;
    }

private:
    simbench::BenchConfig cfg_;
    std::string methods_ = "all";
    std::string fused_kernel_ = "rq";
    double sigma_se_ = -1.0;
    double sigma_rq_ = -1.0;
    double sigma_matern_ = -1.0;
    double sigma_loggpis_ = -1.0;
    int profile_window_ = 100;
    std::string out_;
    std::string scatter_;
};

// ---------------------------------------------------------------- calibrate-noise

class CalibrateNoise final : public Command {
public:
    std::string name() const override { return "calibrate-noise"; }
    std::string description() const override {
        return "Learn the corrective noise term on a simulated calibration scene";
    }

    void declare(Settings& s) override {
        s.add("seed", &cfg_.seed, "master seed");
        s.add("kernel", &kernel_, "se, rq, matern or loggpis");
        s.add("lengthscale", &cfg_.lengthscale, "kernel lengthscale, m");
        s.add("rq_alpha", &cfg_.rq_alpha, "rational quadratic shape");
        s.add("gap", &cfg_.gap, "surface sample spacing, m");
        s.add("noise_sd", &cfg_.noise_sd, "sample positional noise sd, m");
        s.add("out", &out_, "result JSON path", true);
    }

    int run(const Settings& s) override {
        double sigma = 0.0;
        if (kernel_ == "loggpis") {
            sigma = simbench::calibrate_loggpis_noise(cfg_);
        } else {
            const KernelKind kind = checked([&] { return parse_kernel_kind(kernel_); });
            sigma = simbench::calibrate_kernel_noise(cfg_, kind);
        }
        const auto scene = simbench::calibration_scene(cfg_);
        nlohmann::json doc;
        doc["kernel"] = kernel_;
        doc["sigma_n"] = sigma;
        doc["cloud_size"] = scene.cloud.size();
        doc["grid_size"] = scene.grid.size();
        write_json(out_, doc);
        write_manifest(manifest_path(out_, false), name(), cfg_.seed, s.resolved(), {out_});
        std::cout << "sigma_n " << sigma << '\n';
        return 0;
    }

private:
    simbench::BenchConfig cfg_;
    std::string kernel_ = "rq";
    std::string out_;
};

// ---------------------------------------------------------------- field-grid

class FieldGrid final : public Command {
public:
    std::string name() const override { return "field-grid"; }
    std::string description() const override {
        return "Evaluate the distance field of a point cloud on a regular grid";
    }

    void declare(Settings& s) override {
        s.add("cloud", &cloud_, "point-cloud CSV (x,y per row)", true);
        s.add("kernel", &kernel_, "se, rq or matern");
        s.add("lengthscale", &kernel_model_.lengthscale, "kernel lengthscale, m");
        s.add("rq_alpha", &kernel_model_.rq_alpha, "rational quadratic shape");
        s.add("sigma_n", &sigma_n_, "corrective noise");
        s.add("grid", &grid_, "nodes as NXxNY");
        s.add("bounds", &bounds_, "xmin,xmax,ymin,ymax; empty uses the cloud box plus margin");
        s.add("margin", &margin_, "margin around the cloud box, m");
        s.add("fused", &fused_, "evaluate the fused GP / smooth-minimum field");
        s.add("out", &out_, "output CSV path", true);
    }

    int run(const Settings& s) override {
        const auto [nx, ny] = parse_grid_size(grid_);
        checked([&] {
            kernel_model_.kind = parse_kernel_kind(kernel_);
            kernel_model_.validate();
            if (!(sigma_n_ >= 0.0)) throw std::invalid_argument("sigma_n must be non-negative");
            return 0;
        });
        const PointCloud cloud = read_point_cloud_csv(cloud_);
        if (cloud.dim() != 2) throw std::runtime_error("field-grid needs a 2D cloud");
        double x0, x1, y0, y1;
        if (bounds_.empty()) {
            const auto xs = cloud.axis(0);
            const auto ys = cloud.axis(1);
            x0 = *std::min_element(xs.begin(), xs.end()) - margin_;
            x1 = *std::max_element(xs.begin(), xs.end()) + margin_;
            y0 = *std::min_element(ys.begin(), ys.end()) - margin_;
            y1 = *std::max_element(ys.begin(), ys.end()) + margin_;
        } else {
            const auto b = parse_number_list(bounds_);
            if (b.size() != 4 || !(b[1] > b[0]) || !(b[3] > b[2])) throw ConfigError("bounds need xmin<xmax,ymin<ymax");
            x0 = b[0];
            x1 = b[1];
            y0 = b[2];
            y1 = b[3];
        }
        const auto model = LatentFieldModel::build(cloud, kernel_model_, sigma_n_);
        std::vector<std::string> rows(static_cast<std::size_t>(ny));
        parallel_for(rows.size(), [&](std::size_t j) {
            std::string text;
            const double y = ny > 1 ? y0 + (y1 - y0) * static_cast<double>(j) / (ny - 1) : 0.5 * (y0 + y1);
            for (int i = 0; i < nx; ++i) {
                const double x = nx > 1 ? x0 + (x1 - x0) * i / (nx - 1) : 0.5 * (x0 + x1);
                Eigen::VectorXd p(2);
                p << x, y;
                FieldQuery q = fused_ ? query_fused(model, cloud, std::span<const double>(p.data(), 2))
                                      : query_distance(model, p);
                const double gx = q.grad.size() == 2 ? q.grad[0] : std::nan("");
                const double gy = q.grad.size() == 2 ? q.grad[1] : std::nan("");
                text += format_double(x) + ',' + format_double(y) + ',' + format_double(q.d_hat) + ',' +
                        format_double(q.o_hat) + ',' + std::string(to_string(q.status)) + ',' +
                        format_double(q.uncertainty) + ',' + format_double(gx) + ',' + format_double(gy) + '\n';
            }
            rows[j] = std::move(text);
        });
        std::ofstream csv(out_, std::ios::binary);
        csv << "x,y,d_hat,o_hat,status,uncertainty,grad_x,grad_y\n";
        for (const auto& r : rows) csv << r;
        if (!csv) throw std::runtime_error("cannot write " + out_);
        write_manifest(manifest_path(out_, false), name(), 0, s.resolved(), {out_});
        return 0;
    }

private:
    std::string cloud_;
    std::string kernel_ = "rq";
    KernelModel kernel_model_{KernelKind::RationalQuadratic, 0.03, 100.0};
    double sigma_n_ = 0.01;
    std::string grid_ = "200x200";
    std::string bounds_;
    double margin_ = 0.1;
    bool fused_ = false;
    std::string out_;
};

}  // namespace

std::unique_ptr<Command> make_bench_distance() { return std::make_unique<BenchDistance>(); }
std::unique_ptr<Command> make_calibrate_noise() { return std::make_unique<CalibrateNoise>(); }
std::unique_ptr<Command> make_field_grid() { return std::make_unique<FieldGrid>(); }

}  // namespace revert::cli
