#include "revert/simd/kernels.hpp"

#include "dispatch_internal.hpp"

namespace revert::simd {

namespace {

void squared_distances_scalar(const PlanarPoints& pts, const double* q, double* out) {
    const std::size_t n = pts.size();
    const double* xs = pts.x.data();
    const double* ys = pts.y.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - q[0];
        const double dy = ys[i] - q[1];
        out[i] = dx * dx + dy * dy;
    }
    if (pts.dim() == 3) {
        const double* zs = pts.z.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double dz = zs[i] - q[2];
            out[i] = out[i] + dz * dz;
        }
    }
}

MinResult min_squared_distance_2d_scalar(const double* xs, const double* ys, std::size_t n,
                                         double qx, double qy) {
    MinResult best{};
    best.value = (xs[0] - qx) * (xs[0] - qx) + (ys[0] - qy) * (ys[0] - qy);
    for (std::size_t i = 1; i < n; ++i) {
        const double dx = xs[i] - qx;
        const double dy = ys[i] - qy;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best.value) {
            best.value = d2;
            best.index = i;
        }
    }
    return best;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{"scalar", &squared_distances_scalar,
                                   &min_squared_distance_2d_scalar, &dot_scalar};
    return table;
}

}  // namespace revert::simd
