#include "revert/ugw.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "revert/parallel.hpp"
#include "revert/rng.hpp"
#include "revert/simd/kernels.hpp"

namespace revert::ugw {

namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

using Complex = std::complex<double>;

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Out-of-place real/complex transforms of one length, planned once.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        std::vector<double> real(n);
        std::vector<Complex> half(n / 2 + 1), full(n), full_out(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const int len = static_cast<int>(n);
        std::lock_guard<std::mutex> lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_1d(len, real.data(), as_fftw(half.data()), flags);
        inverse_ = fftw_plan_dft_c2r_1d(len, as_fftw(half.data()), real.data(), flags);
        complex_inverse_ =
            fftw_plan_dft_1d(len, as_fftw(full.data()), as_fftw(full_out.data()), FFTW_BACKWARD, flags);
    }
    ~RealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
        fftw_destroy_plan(complex_inverse_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    // x is zero-padded to the transform length.
    [[nodiscard]] std::vector<Complex> forward(const std::vector<double>& x) const {
        std::vector<double> in(n_, 0.0);
        std::copy_n(x.begin(), std::min(x.size(), n_), in.begin());
        std::vector<Complex> out(n_ / 2 + 1);
        fftw_execute_dft_r2c(forward_, in.data(), as_fftw(out.data()));
        return out;
    }

    // Unnormalized inverse; the input is copied because c2r overwrites it.
    [[nodiscard]] std::vector<double> inverse(std::vector<Complex> spectrum) const {
        std::vector<double> out(n_);
        fftw_execute_dft_c2r(inverse_, as_fftw(spectrum.data()), out.data());
        return out;
    }

    [[nodiscard]] std::vector<Complex> complex_inverse(std::vector<Complex> spectrum) const {
        std::vector<Complex> out(n_);
        fftw_execute_dft(complex_inverse_, as_fftw(spectrum.data()), as_fftw(out.data()));
        return out;
    }

    // |x + j H(x)| over the first x.size() samples.
    [[nodiscard]] std::vector<double> analytic_magnitude(const std::vector<double>& x) const {
        const auto spec = forward(x);
        std::vector<Complex> h(n_, Complex(0.0, 0.0));
        h[0] = spec[0];
        for (std::size_t k = 1; k < n_ / 2; ++k) h[k] = 2.0 * spec[k];
        h[n_ / 2] = spec[n_ / 2];
        const auto a = complex_inverse(std::move(h));
        std::vector<double> out(x.size());
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(a[i]) * scale;
        return out;
    }

private:
    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
    fftw_plan complex_inverse_ = nullptr;
};

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

void UgwConfig::validate() const {
    if (!(center_freq > 0.0)) throw std::invalid_argument("center_freq must be positive");
    if (!(sample_rate >= 4.0 * center_freq)) {
        throw std::invalid_argument("sample_rate must be at least four times center_freq");
    }
    if (burst_cycles < 1) throw std::invalid_argument("burst_cycles must be at least 1");
    if (!(group_velocity > 0.0)) throw std::invalid_argument("group_velocity must be positive");
    if (!(duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
    if (std::isnan(snr_db)) throw std::invalid_argument("snr_db must not be NaN");
}

double UgwConfig::wavenumber(double omega) const {
    if (dispersion.empty()) return omega / group_velocity;
    double k = 0.0;
    for (auto it = dispersion.rbegin(); it != dispersion.rend(); ++it) k = k * omega + *it;
    return k;
}

PlateScene::PlateScene(std::vector<Eigen::Vector2d> polygon) : polygon_(std::move(polygon)) {
    const std::size_t n = polygon_.size();
    if (n < 3) throw std::invalid_argument("plate polygon needs at least three vertices");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = polygon_[i];
        const auto& b = polygon_[(i + 1) % n];
        const auto& c = polygon_[(i + 2) % n];
        if (!(cross(b - a, c - b) > 0.0)) {
            throw std::invalid_argument("plate polygon must be convex and counter-clockwise");
        }
    }
}

PlateScene PlateScene::rectangle(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("plate size must be positive");
    return PlateScene({{0.0, 0.0}, {width, 0.0}, {width, height}, {0.0, height}});
}

bool PlateScene::contains(const Eigen::Vector2d& p) const {
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = polygon_[i];
        const auto& b = polygon_[(i + 1) % n];
        if (!(cross(b - a, p - a) > 0.0)) return false;
    }
    return true;
}

double PlateScene::diameter() const {
    double best = 0.0;
    for (const auto& a : polygon_) {
        for (const auto& b : polygon_) best = std::max(best, (a - b).norm());
    }
    return best;
}

double PlateScene::boundary_distance(const Eigen::Vector2d& p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = polygon_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d a = polygon_[i];
        const Eigen::Vector2d ab = polygon_[(i + 1) % n] - a;
        const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (p - (a + t * ab)).norm());
    }
    return best;
}

std::vector<Eigen::Vector2d> image_sources(const PlateScene& scene, const Eigen::Vector2d& p) {
    if (!scene.contains(p)) throw std::invalid_argument("source must lie strictly inside the plate");
    const auto& poly = scene.polygon();
    std::vector<Eigen::Vector2d> images;
    images.reserve(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Eigen::Vector2d a = poly[i];
        const Eigen::Vector2d dir = (poly[(i + 1) % poly.size()] - a).normalized();
        const Eigen::Vector2d normal(-dir.y(), dir.x());
        images.push_back(p - 2.0 * (p - a).dot(normal) * normal);
    }
    return images;
}

double EnvelopeSignal::at(double d) const {
    if (values.empty() || !(d >= 0.0)) return 0.0;
    const double u = d / step;
    const auto i = static_cast<std::size_t>(u);
    if (i + 1 >= values.size()) return i + 1 == values.size() && u == static_cast<double>(i)
                                          ? values.back()
                                          : 0.0;
    const double t = u - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

struct UgwModel::Plans {
    RealFft signal;
    RealFft hilbert;
    Plans(std::size_t n_signal, std::size_t n_hilbert) : signal(n_signal), hilbert(n_hilbert) {}
};

UgwModel::UgwModel(const UgwConfig& config, double max_distance) : config_(config) {
    config_.validate();
    if (!(max_distance > 0.0)) throw std::invalid_argument("max_distance must be positive");
    step_ = config_.distance_step();
    const double needed = 2.0 * max_distance / config_.group_velocity + config_.burst_duration();
    if (config_.duration == 0.0) {
        config_.duration = needed + 2.0 * config_.burst_duration();
    } else if (config_.duration < needed) {
        throw std::invalid_argument("duration does not cover the round trip to max_distance");
    }
    record_length_ = static_cast<std::size_t>(std::ceil(config_.duration * config_.sample_rate));
    fft_length_ = next_pow2(2 * record_length_);

    const auto grid = static_cast<std::size_t>(std::ceil(max_distance / step_)) + 1;
    hilbert_length_ = next_pow2(2 * grid);
    plans_ = std::make_unique<Plans>(fft_length_, hilbert_length_);
    burst_spectrum_ = plans_->signal.forward(burst());

    templates_.resize(grid);
    template_norms_.resize(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        templates_[i] = echo(2.0 * step_ * static_cast<double>(i));
        template_norms_[i] = std::sqrt(simd::dot(templates_[i], templates_[i]));
    }
}

UgwModel::~UgwModel() = default;

std::vector<double> UgwModel::burst() const {
    std::vector<double> s(record_length_, 0.0);
    const double f = config_.center_freq;
    const double length = config_.burst_duration();
    for (std::size_t n = 0; n < record_length_; ++n) {
        const double t = static_cast<double>(n) / config_.sample_rate;
        if (t > length) break;
        const double window = 0.5 * (1.0 - std::cos(2.0 * M_PI * t / length));
        s[n] = window * std::sin(2.0 * M_PI * f * t);
    }
    return s;
}

std::vector<double> UgwModel::propagate(const std::vector<double>& radii) const {
    const std::size_t bins = fft_length_ / 2 + 1;
    std::vector<Complex> spec(bins, Complex(0.0, 0.0));
    const double domega = 2.0 * M_PI * config_.sample_rate / static_cast<double>(fft_length_);
    for (std::size_t k = 1; k < bins; ++k) {
        const double kw = config_.wavenumber(domega * static_cast<double>(k));
        if (!(kw > 0.0)) continue;
        Complex g(0.0, 0.0);
        for (double r : radii) {
            r = std::max(r, step_);
            g += std::polar(1.0 / std::sqrt(kw * r), -kw * r);
        }
        spec[k] = burst_spectrum_[k] * g;
    }
    spec[bins - 1] = Complex(spec[bins - 1].real(), 0.0);
    auto full = plans_->signal.inverse(std::move(spec));
    full.resize(record_length_);
    const double scale = 1.0 / static_cast<double>(fft_length_);
    for (double& v : full) v *= scale;
    return full;
}

std::vector<double> UgwModel::echo(double r) const { return propagate({r}); }

std::vector<double> UgwModel::synthesize(const PlateScene& scene, const Eigen::Vector2d& p,
                                         std::mt19937_64& rng) const {
    std::vector<double> radii;
    for (const auto& rho : image_sources(scene, p)) radii.push_back((rho - p).norm());
    auto z = propagate(radii);
    if (std::isfinite(config_.snr_db)) {
        const double power = simd::dot(z, z) / static_cast<double>(z.size());
        const double sd = std::sqrt(power / std::pow(10.0, config_.snr_db / 10.0));
        std::normal_distribution<double> noise(0.0, sd);
        for (double& v : z) v += noise(rng);
    }
    return z;
}

std::vector<double> UgwModel::correlation(const std::vector<double>& z) const {
    if (z.size() != record_length_) throw std::invalid_argument("measurement length mismatch");
    const double norm = std::sqrt(simd::dot(z, z));
    if (!(norm > 0.0)) throw EmptyMeasurement();
    std::vector<double> c(templates_.size());
    for (std::size_t i = 0; i < templates_.size(); ++i) {
        c[i] = simd::dot(z, templates_[i]) / (norm * template_norms_[i]);
    }
    return c;
}

EnvelopeSignal UgwModel::envelope(const std::vector<double>& z) const {
    EnvelopeSignal e;
    e.step = step_;
    e.values = plans_->hilbert.analytic_magnitude(correlation(z));
    for (double& v : e.values) {
        if (v > 1.0) {
            e.max_overshoot = std::max(e.max_overshoot, v - 1.0);
            v = 1.0;
        }
    }
    return e;
}

std::vector<Eigen::Vector2d> grid_positions(const PlateScene& scene, int rows, int cols,
                                            double spacing) {
    if (rows < 1 || cols < 1 || !(spacing > 0.0)) throw std::invalid_argument("invalid sensor grid");
    Eigen::Vector2d lo = scene.polygon().front();
    Eigen::Vector2d hi = lo;
    for (const auto& v : scene.polygon()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const Eigen::Vector2d centre = 0.5 * (lo + hi);
    const double x0 = centre.x() - 0.5 * spacing * (cols - 1);
    const double y0 = centre.y() - 0.5 * spacing * (rows - 1);
    std::vector<Eigen::Vector2d> out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const Eigen::Vector2d p(x0 + spacing * c, y0 + spacing * r);
            if (!scene.contains(p)) throw std::invalid_argument("sensor grid does not fit the plate");
            out.push_back(p);
        }
    }
    return out;
}

MeasurementSet synthesize_measurements(const UgwModel& model, const PlateScene& scene,
                                       const std::vector<Eigen::Vector2d>& positions,
                                       std::uint64_t seed) {
    MeasurementSet set;
    set.positions = positions;
    set.signals.resize(positions.size());
    set.envelopes.resize(positions.size());
    parallel_for(positions.size(), [&](std::size_t i) {
        Rng rng = make_rng(seed, "measurement", i);
        set.signals[i] = model.synthesize(scene, positions[i], rng);
        set.envelopes[i] = model.envelope(set.signals[i]);
    });
    return set;
}

GridDataset make_grid_dataset(const GridDatasetSpec& spec) {
    PlateScene scene = PlateScene::rectangle(spec.width, spec.height);
    const UgwModel model(spec.ugw, scene.diameter());
    auto positions = grid_positions(scene, spec.rows, spec.cols, spec.spacing);
    MeasurementSet set = synthesize_measurements(model, scene, positions, spec.seed);
    return GridDataset{spec, std::move(scene), std::move(set)};
}

std::vector<double> analytic_magnitude(const std::vector<double>& x) {
    const RealFft fft(next_pow2(2 * std::max<std::size_t>(x.size(), 1)));
    return fft.analytic_magnitude(x);
}

double first_echo_distance(const EnvelopeSignal& e, double threshold, double prominence) {
    const auto& v = e.values;
    const std::size_t n = v.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(v[i] > v[i - 1] && v[i] >= v[i + 1]) || v[i] < threshold) continue;
        double left = v[i];
        for (std::size_t j = i; j-- > 0;) {
            if (v[j] > v[i]) break;
            left = std::min(left, v[j]);
        }
        double right = v[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (v[j] > v[i]) break;
            right = std::min(right, v[j]);
        }
        if (v[i] - std::max(left, right) < prominence) continue;
        const double denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
        const double shift = denom < 0.0 ? 0.5 * (v[i - 1] - v[i + 1]) / denom : 0.0;
        return e.step * (static_cast<double>(i) + std::clamp(shift, -0.5, 0.5));
    }
    throw NoEcho();
}

}  // namespace revert::ugw
