#pragma once

// Data-parallel inner loops shared by the field, oracle and signal code.
//
// Every kernel has a portable scalar reference implementation. Vector
// variants (AVX2 on x86-64, NEON on AArch64) are compiled into separate
// translation units and chosen once at startup from the CPU feature bits.
// Setting REVERT_FIELD_SIMD=scalar forces the reference path.
//
// Element-wise kernels (squared distances, minimum search) are bit-identical
// across variants. Reductions (dot) differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace revert::simd {

struct MinResult {
    double value = 0.0;     // smallest squared distance
    std::size_t index = 0;  // first index attaining it
};

// Planar (structure-of-arrays) view of a point set. Unused axes are empty.
struct PlanarPoints {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> z;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
    [[nodiscard]] int dim() const noexcept { return z.empty() ? 2 : 3; }
};

struct KernelTable {
    std::string_view name;

    // out[i] = |p_i - q|^2 ; q has pts.dim() entries.
    void (*squared_distances)(const PlanarPoints& pts, const double* q, double* out);

    // argmin_i |p_i - q|^2 over a 2D point set; n must be > 0.
    MinResult (*min_squared_distance_2d)(const double* xs, const double* ys, std::size_t n,
                                         double qx, double qy);

    double (*dot)(const double* a, const double* b, std::size_t n);
};

// Portable reference kernels.
const KernelTable& scalar_table() noexcept;

// Vector kernels for the host CPU, or nullptr when the build or CPU lacks them.
const KernelTable* vector_table() noexcept;

// Kernels used by the library: vector_table() unless unavailable or disabled
// via REVERT_FIELD_SIMD=scalar.
const KernelTable& active() noexcept;

inline void squared_distances(const PlanarPoints& pts, std::span<const double> q,
                              std::span<double> out) {
    active().squared_distances(pts, q.data(), out.data());
}

inline MinResult min_squared_distance_2d(std::span<const double> xs, std::span<const double> ys,
                                         double qx, double qy) {
    return active().min_squared_distance_2d(xs.data(), ys.data(), xs.size(), qx, qy);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

}  // namespace revert::simd
