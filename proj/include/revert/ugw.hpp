#pragma once

// Synthetic ultrasonic guided-wave measurements on a convex plate: image
// sources for first-order boundary echoes, cylindrical-spreading propagation
// in the frequency domain, the normalized correlation signal against
// single-reflection templates, its Hilbert envelope and first-echo picking.

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

namespace revert::ugw {

struct UgwConfig {
    double sample_rate = 1e6;       // Hz
    double duration = 0.0;          // s; 0 picks the shortest record covering the plate
    double center_freq = 5e4;       // Hz
    int burst_cycles = 2;           // Hann-windowed toneburst length
    double group_velocity = 1500.0; // m/s, nondispersive default k = omega / c
    // k(omega) = sum_i dispersion[i] * omega^i when non-empty.
    std::vector<double> dispersion;
    double snr_db = 20.0;           // infinity disables noise

    void validate() const;
    [[nodiscard]] double wavenumber(double omega) const;
    // Envelope grid step: an eighth of the wavelength at the center frequency.
    [[nodiscard]] double distance_step() const { return group_velocity / (8.0 * center_freq); }
    [[nodiscard]] double burst_duration() const { return burst_cycles / center_freq; }
};

class PlateScene {
public:
    // Convex polygon, counter-clockwise. Throws std::invalid_argument otherwise.
    explicit PlateScene(std::vector<Eigen::Vector2d> polygon);
    static PlateScene rectangle(double width, double height);

    [[nodiscard]] const std::vector<Eigen::Vector2d>& polygon() const noexcept { return polygon_; }
    [[nodiscard]] bool contains(const Eigen::Vector2d& p) const;
    // Largest vertex-to-vertex distance.
    [[nodiscard]] double diameter() const;
    // Distance from an interior point to the nearest edge.
    [[nodiscard]] double boundary_distance(const Eigen::Vector2d& p) const;

private:
    std::vector<Eigen::Vector2d> polygon_;
};

// p mirrored across each edge's supporting line, one image per edge.
// Throws std::invalid_argument when p is not strictly inside.
std::vector<Eigen::Vector2d> image_sources(const PlateScene& scene, const Eigen::Vector2d& p);

struct EnvelopeSignal {
    double step = 0.0;             // distance between samples, m
    std::vector<double> values;    // e(i * step), in [0, 1]
    double max_overshoot = 0.0;    // largest amount removed by clamping at 1

    [[nodiscard]] double distance(std::size_t i) const { return step * static_cast<double>(i); }
    // Linear interpolation; 0 outside the grid.
    [[nodiscard]] double at(double d) const;
};

class NoEcho : public std::runtime_error {
public:
    NoEcho() : std::runtime_error("no-echo") {}
};

class EmptyMeasurement : public std::runtime_error {
public:
    EmptyMeasurement() : std::runtime_error("empty-measurement") {}
};

// Frequency-domain synthesis and the template bank for one configuration
// and maximum reflector distance. Immutable after construction and safe to
// share between threads.
class UgwModel {
public:
    UgwModel(const UgwConfig& config, double max_distance);
    ~UgwModel();
    UgwModel(const UgwModel&) = delete;
    UgwModel& operator=(const UgwModel&) = delete;

    [[nodiscard]] const UgwConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::size_t record_length() const noexcept { return record_length_; }
    [[nodiscard]] double distance_step() const noexcept { return step_; }
    [[nodiscard]] std::size_t grid_size() const noexcept { return templates_.size(); }

    // Excitation s(t) over the record.
    [[nodiscard]] std::vector<double> burst() const;
    // g(r, t) * s(t) over the record; r is clamped to at least one grid step.
    [[nodiscard]] std::vector<double> echo(double r) const;
    // Sum of echoes from every image source plus white noise at snr_db.
    [[nodiscard]] std::vector<double> synthesize(const PlateScene& scene, const Eigen::Vector2d& p,
                                                 std::mt19937_64& rng) const;
    // Single-reflection template for grid index i (reflector at i * step).
    [[nodiscard]] const std::vector<double>& reference(std::size_t i) const { return templates_[i]; }

    // Normalized correlation against every template, then the magnitude of
    // its analytic signal along distance, clamped to [0, 1].
    [[nodiscard]] EnvelopeSignal envelope(const std::vector<double>& z) const;
    // Correlation signal before the Hilbert step.
    [[nodiscard]] std::vector<double> correlation(const std::vector<double>& z) const;

private:
    struct Plans;

    [[nodiscard]] std::vector<double> propagate(const std::vector<double>& radii) const;

    UgwConfig config_;
    double step_ = 0.0;
    std::size_t record_length_ = 0;
    std::size_t fft_length_ = 0;
    std::size_t hilbert_length_ = 0;
    std::vector<std::complex<double>> burst_spectrum_;
    std::vector<std::vector<double>> templates_;
    std::vector<double> template_norms_;
    std::unique_ptr<Plans> plans_;
};

// rows x cols sensor grid with the given spacing, centred on the plate's
// bounding box; row-major, x varying fastest.
std::vector<Eigen::Vector2d> grid_positions(const PlateScene& scene, int rows, int cols,
                                            double spacing);

struct MeasurementSet {
    std::vector<Eigen::Vector2d> positions;
    std::vector<std::vector<double>> signals;
    std::vector<EnvelopeSignal> envelopes;
};

// One noisy measurement and its envelope per position; position i draws its
// noise from the seed's "measurement" stream i.
MeasurementSet synthesize_measurements(const UgwModel& model, const PlateScene& scene,
                                       const std::vector<Eigen::Vector2d>& positions,
                                       std::uint64_t seed);

// Desk-scale dataset: a rectangular plate probed on a sensor grid.
struct GridDatasetSpec {
    double width = 0.6;
    double height = 0.45;
    int rows = 9;
    int cols = 12;
    double spacing = 0.045;
    std::uint64_t seed = 1;
    UgwConfig ugw;
};

struct GridDataset {
    GridDatasetSpec spec;
    PlateScene scene;
    MeasurementSet measurements;
};

GridDataset make_grid_dataset(const GridDatasetSpec& spec);

// Time-domain analytic-signal magnitude of a real sequence (power-of-two
// zero padding). Exposed for tests and time-of-flight checks.
std::vector<double> analytic_magnitude(const std::vector<double>& x);

// Smallest-distance local maximum with value >= threshold and topographic
// prominence >= prominence, refined by a parabola through its neighbours.
// Throws NoEcho when none qualifies.
double first_echo_distance(const EnvelopeSignal& e, double threshold = 0.4,
                           double prominence = 0.1);

}  // namespace revert::ugw
