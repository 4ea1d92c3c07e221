#include <cmath>
#include <fstream>
#include <iostream>

#include "archive.hpp"
#include "commands.hpp"
#include "revert/echoloc.hpp"
#include "revert/mapping.hpp"

namespace revert::cli {

namespace {

template <class F>
auto checked(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// Settings of a synthetic grid dataset, shared by the UGW commands.
struct DatasetSettings {
    ugw::GridDatasetSpec spec;
    std::string dispersion;
    double snr_db = 20.0;
    std::string measurements;  // archive directory; empty synthesizes

    void declare(Settings& s, bool with_archive) {
        s.add("seed", &spec.seed, "master seed");
        s.add("width", &spec.width, "plate width, m");
        s.add("height", &spec.height, "plate height, m");
        s.add("rows", &spec.rows, "sensor grid rows");
        s.add("cols", &spec.cols, "sensor grid columns");
        s.add("spacing", &spec.spacing, "sensor grid spacing, m");
        s.add("ugw.sample_rate", &spec.ugw.sample_rate, "Hz");
        s.add("ugw.duration", &spec.ugw.duration, "record length, s; 0 covers the plate");
        s.add("ugw.center_freq", &spec.ugw.center_freq, "toneburst centre frequency, Hz");
        s.add("ugw.burst_cycles", &spec.ugw.burst_cycles, "toneburst cycles");
        s.add("ugw.group_velocity", &spec.ugw.group_velocity, "m/s");
        s.add("ugw.dispersion", &dispersion, "comma-separated k(omega) polynomial coefficients");
        s.add("ugw.snr_db", &snr_db, "signal-to-noise ratio, dB; negative disables noise");
        if (with_archive) s.add("measurements", &measurements, "measurement archive directory");
    }

    ugw::GridDatasetSpec resolved_spec() {
        spec.ugw.dispersion = parse_number_list(dispersion);
        spec.ugw.snr_db = snr_db < 0.0 ? std::numeric_limits<double>::infinity() : snr_db;
        checked([&] {
            spec.ugw.validate();
            if (!(spec.width > 0.0 && spec.height > 0.0)) throw std::invalid_argument("plate size must be positive");
            return 0;
        });
        return spec;
    }

    // Archive contents when given, otherwise a freshly synthesized dataset.
    Archive load() {
        if (!measurements.empty()) return read_archive(measurements);
        const auto data = checked([&] { return ugw::make_grid_dataset(resolved_spec()); });
        return Archive{data.spec, data.measurements.positions, data.measurements.envelopes};
    }
};

// ---------------------------------------------------------------- ugw-sim

class UgwSim final : public Command {
public:
    std::string name() const override { return "ugw-sim"; }
    std::string description() const override {
        return "Synthesize guided-wave measurements on a sensor grid of a rectangular plate";
    }
    void declare(Settings& s) override {
        data_.declare(s, false);
        s.add("out", &out_, "archive directory", true);
    }
    int run(const Settings& s) override {
        const auto spec = data_.resolved_spec();
        const auto data = checked([&] { return ugw::make_grid_dataset(spec); });
        const auto files = write_archive(out_, data);
        write_manifest(manifest_path(out_, true), name(), spec.seed, s.resolved(), files);
        std::size_t overshoots = 0;
        for (const auto& e : data.measurements.envelopes) overshoots += e.max_overshoot > 1e-3 ? 1 : 0;
        std::cout << data.measurements.positions.size() << " measurements written to " << out_ << '\n';
        if (overshoots > 0) std::cout << overshoots << " envelopes were clamped by more than 1e-3\n";
        return 0;
    }

private:
    DatasetSettings data_;
    std::string out_;
};

// ---------------------------------------------------------------- echoloc

std::vector<std::vector<echoloc::Step>> read_trajectories(const std::string& path,
                                                          std::size_t measurements) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    try {
        const auto doc = nlohmann::json::parse(in);
        std::vector<std::vector<echoloc::Step>> out;
        for (const auto& traj : doc.at("trajectories")) {
            std::vector<echoloc::Step> steps;
            for (const auto& st : traj) {
                echoloc::Step step;
                step.odom_delta = {st.at("dx").get<double>(), st.at("dy").get<double>()};
                step.measurement = st.at("measurement").get<std::size_t>();
                step.truth = {st.at("x").get<double>(), st.at("y").get<double>()};
                if (step.measurement >= measurements) throw std::runtime_error("trajectory refers to a missing measurement");
                steps.push_back(step);
            }
            out.push_back(std::move(steps));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed trajectory file: " + std::string(e.what()));
    }
}

nlohmann::json trajectories_json(const std::vector<std::vector<echoloc::Step>>& trajectories) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& t : trajectories) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : t) {
            steps.push_back({{"dx", s.odom_delta.x()}, {"dy", s.odom_delta.y()},
                             {"measurement", s.measurement}, {"x", s.truth.x()}, {"y", s.truth.y()}});
        }
        all.push_back(steps);
    }
    return {{"trajectories", all}};
}

ugw::PlateScene read_scene(const std::string& path, const ugw::GridDatasetSpec& spec) {
    if (path.empty()) return ugw::PlateScene::rectangle(spec.width, spec.height);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.contains("polygon")) {
            std::vector<Eigen::Vector2d> poly;
            for (const auto& v : doc.at("polygon")) poly.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
            return checked([&] { return ugw::PlateScene(poly); });
        }
        return checked([&] {
            return ugw::PlateScene::rectangle(doc.at("width").get<double>(), doc.at("height").get<double>());
        });
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed scene file: " + std::string(e.what()));
    }
}

class Echoloc final : public Command {
public:
    std::string name() const override { return "echoloc"; }
    std::string description() const override {
        return "Particle-filter echolocation along grid trajectories";
    }
    void declare(Settings& s) override {
        data_.declare(s, true);
        s.add("scene", &scene_, "plate JSON ({\"polygon\": [[x,y],...]} or width/height)");
        s.add("traj", &traj_, "trajectory JSON; empty generates random walks");
        s.add("traj_out", &traj_out_, "optional path to save the trajectories used");
        s.add("oracle", &oracle_, "ours, loggpis or rect");
        s.add("trajectories", &exp_.trajectories, "random walks to generate");
        s.add("steps", &exp_.steps, "steps per random walk");
        s.add("walk_odom_noise_sd", &exp_.walk_odom_noise_sd, "odometry noise of the walks, m");
        s.add("burn_in", &exp_.burn_in, "steps excluded from the converged median");
        s.add("filter.n_particles", &exp_.filter.n_particles, "particles");
        s.add("filter.beta", &exp_.filter.beta, "envelope likelihood sharpness");
        s.add("filter.resample_interval", &exp_.filter.resample_interval, "steps between resampling");
        s.add("filter.odom_noise_sd", &exp_.filter.odom_noise_sd, "motion-update noise, m");
        s.add("filter.estimate_quantile", &exp_.filter.estimate_quantile, "fraction of best particles averaged");
        s.add("oracle_params.boundary_gap", &exp_.oracle.boundary_gap, "boundary sample spacing, m");
        s.add("oracle_params.lengthscale", &exp_.oracle.lengthscale, "m");
        s.add("oracle_params.rq_alpha", &exp_.oracle.rq_alpha, "rational quadratic shape");
        s.add("oracle_params.sigma_n", &exp_.oracle.sigma_n, "corrective noise");
        s.add("out", &out_, "errors CSV path", true);
    }
    int run(const Settings& s) override {
        const auto kind = checked([&] {
            exp_.filter.validate();
            if (exp_.trajectories < 1 || exp_.steps < 1) throw std::invalid_argument("trajectories and steps must be positive");
            return echoloc::parse_oracle(oracle_);
        });
        exp_.seed = data_.spec.seed;
        const Archive archive = data_.load();
        ugw::GridDataset data{archive.spec, read_scene(scene_, archive.spec), {}};
        data.measurements.positions = archive.positions;
        data.measurements.envelopes = archive.envelopes;

        const auto trajectories = traj_.empty() ? checked([&] { return echoloc::make_trajectories(data, exp_); })
                                                : read_trajectories(traj_, archive.envelopes.size());
        const auto result = echoloc::run_experiment(data, trajectories, kind, exp_);

        std::ofstream csv(out_, std::ios::binary);
        csv << "trajectory,step,err_m,est_x,est_y\n";
        for (std::size_t t = 0; t < result.runs.size(); ++t) {
            const auto& run = result.runs[t];
            for (std::size_t k = 0; k < run.errors.size(); ++k) {
                csv << t << ',' << k << ',' << format_double(run.errors[k]) << ','
                    << format_double(run.estimates[k].x()) << ',' << format_double(run.estimates[k].y()) << '\n';
            }
        }
        if (!csv) throw std::runtime_error("cannot write " + out_);
        std::vector<std::filesystem::path> outputs = {out_};
        if (!traj_out_.empty()) {
            write_json(traj_out_, trajectories_json(trajectories));
            outputs.emplace_back(traj_out_);
        }
        auto settings = s.resolved();
        write_manifest(manifest_path(out_, false), name(), data_.spec.seed, settings, outputs);
        int divergences = 0;
        for (const auto& r : result.runs) divergences += r.divergences;
        std::cout << "oracle " << oracle_ << ": median error after step " << exp_.burn_in << " = "
                  << result.converged_median << " m, divergences " << divergences << '\n';
        return 0;
    }

private:
    DatasetSettings data_;
    echoloc::ExperimentConfig exp_;
    std::string scene_;
    std::string traj_;
    std::string traj_out_;
    std::string oracle_ = "ours";
    std::string out_;
};

// ---------------------------------------------------------------- map

nlohmann::json points_json(const std::vector<Eigen::Vector2d>& pts) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : pts) out.push_back({p.x(), p.y()});
    return out;
}

nlohmann::json stage_json(const mapping::StageResult& r) {
    return {{"points", points_json(r.state.points)},
            {"initial_cost", r.report.initial_cost},
            {"final_cost", r.report.final_cost},
            {"iterations", r.report.iterations},
            {"termination", std::string(mapping::to_string(r.report.termination))},
            {"jacobian_rank", r.report.jacobian_rank},
            {"fallbacks", r.fallbacks}};
}

class Map final : public Command {
public:
    std::string name() const override { return "map"; }
    std::string description() const override {
        return "Map the plate boundary from guided-wave measurements at known positions";
    }
    void declare(Settings& s) override {
        data_.declare(s, true);
        s.add("kernel", &kernel_, "se, rq or matern");
        s.add("lengthscale", &cfg_.kernel.lengthscale, "m");
        s.add("rq_alpha", &cfg_.kernel.rq_alpha, "rational quadratic shape");
        s.add("sigma_n", &cfg_.sigma_n, "corrective noise");
        s.add("alpha", &cfg_.reg_alpha, "chain regularizer weight");
        s.add("q", &cfg_.q, "virtual points; 0 picks ceil(perimeter / 1.5 l)");
        s.add("init_margin", &cfg_.init_margin, "initial circle radius beyond the median first echo, m");
        s.add("two_stage", &cfg_.two_stage, "run the first-echo stage before the envelope stage");
        s.add("field", &field_, "ours or loggpis");
        s.add("echo_threshold", &cfg_.echo_threshold, "first-echo peak threshold");
        s.add("echo_prominence", &cfg_.echo_prominence, "first-echo peak prominence");
        s.add("lsq.fd_step", &cfg_.lsq.fd_step, "forward-difference step, m");
        s.add("lsq.rel_cost_tol", &cfg_.lsq.rel_cost_tol, "relative cost decrease tolerance");
        s.add("lsq.step_tol", &cfg_.lsq.step_tol, "step norm tolerance");
        s.add("lsq.max_iterations", &cfg_.lsq.max_iterations, "Jacobian evaluations");
        s.add("grid", &grid_, "field CSV nodes as NXxNY over the plate");
        s.add("field_csv", &field_csv_, "optional field-grid CSV path");
        s.add("das_csv", &das_csv_, "optional delay-and-sum map CSV path");
        s.add("out", &out_, "map JSON path", true);
    }
    int run(const Settings& s) override {
        const auto [nx, ny] = parse_grid_size(grid_);
        checked([&] {
            cfg_.kernel.kind = parse_kernel_kind(kernel_);
            cfg_.kernel.validate();
            cfg_.field = mapping::parse_field_model(field_);
            return 0;
        });
        const Archive archive = data_.load();
        const auto scene = ugw::PlateScene::rectangle(archive.spec.width, archive.spec.height);
        if (cfg_.q == 0) {
            cfg_.q = mapping::default_point_count(2.0 * (archive.spec.width + archive.spec.height),
                                                  cfg_.kernel.lengthscale);
        }
        const auto result = checked([&] { return mapping::run_mapping(archive.positions, archive.envelopes, cfg_); });

        mapping::Grid2 interior;
        interior.lo = {0.01, 0.01};
        interior.hi = {archive.spec.width - 0.01, archive.spec.height - 0.01};
        interior.nx = nx;
        interior.ny = ny;

        nlohmann::json doc;
        doc["q"] = cfg_.q;
        doc["first_echo"] = result.first_echo;
        doc["initial_points"] = points_json(result.initial.points);
        if (result.stage1) doc["stage1"] = stage_json(*result.stage1);
        doc["stage2"] = stage_json(result.stage2);
        doc["points"] = points_json(result.stage2.state.points);
        doc["interior_rmse"] = mapping::field_rmse(result.stage2.state, scene, interior);
        std::vector<std::filesystem::path> outputs = {out_};
        write_json(out_, doc);

        if (!field_csv_.empty()) {
            const mapping::MapField field(result.stage2.state.points, result.stage2.state);
            std::ofstream csv(field_csv_, std::ios::binary);
            csv << "x,y,d_hat,o_hat,true_distance\n";
            mapping::Grid2 plate = interior;
            plate.lo = {0.0, 0.0};
            plate.hi = {archive.spec.width, archive.spec.height};
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    const Eigen::Vector2d p = plate.node(i, j);
                    csv << format_double(p.x()) << ',' << format_double(p.y()) << ','
                        << format_double(field.distance(p)) << ','
                        << format_double(field.latent().latent_mean(Eigen::VectorXd(p))) << ','
                        << format_double(std::min({p.x(), archive.spec.width - p.x(), p.y(), archive.spec.height - p.y()}))
                        << '\n';
                }
            }
            if (!csv) throw std::runtime_error("cannot write " + field_csv_);
            outputs.emplace_back(field_csv_);
        }
        if (!das_csv_.empty()) {
            mapping::Grid2 box;
            box.lo = {-0.05, -0.05};
            box.hi = {archive.spec.width + 0.05, archive.spec.height + 0.05};
            box.nx = nx;
            box.ny = ny;
            const auto das = mapping::das_map(archive.positions, archive.envelopes, box);
            std::ofstream csv(das_csv_, std::ios::binary);
            csv << "x,y,likelihood\n";
            for (int j = 0; j < ny; ++j) {
                for (int i = 0; i < nx; ++i) {
                    const Eigen::Vector2d p = box.node(i, j);
                    csv << format_double(p.x()) << ',' << format_double(p.y()) << ','
                        << format_double(das[static_cast<std::size_t>(j * nx + i)]) << '\n';
                }
            }
            if (!csv) throw std::runtime_error("cannot write " + das_csv_);
            outputs.emplace_back(das_csv_);
        }
        write_manifest(manifest_path(out_, false), name(), data_.spec.seed, s.resolved(), outputs);
        std::cout << "interior distance RMSE " << doc["interior_rmse"].get<double>() << " m\n";
        return 0;
    }

private:
    DatasetSettings data_;
    mapping::MappingConfig cfg_;
    std::string kernel_ = "rq";
    std::string field_ = "ours";
    std::string grid_ = "59x44";
    std::string field_csv_;
    std::string das_csv_;
    std::string out_;
};

}  // namespace

std::unique_ptr<Command> make_ugw_sim() { return std::make_unique<UgwSim>(); }
std::unique_ptr<Command> make_echoloc() { return std::make_unique<Echoloc>(); }
std::unique_ptr<Command> make_map() { return std::make_unique<Map>(); }

}  // namespace revert::cli
