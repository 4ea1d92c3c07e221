#include "dispatch_internal.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace revert::simd::detail {

namespace {

void squared_distances_neon(const PlanarPoints& pts, const double* q, double* out) {
    const std::size_t n = pts.size();
    const double* xs = pts.x.data();
    const double* ys = pts.y.data();
    const float64x2_t qx = vdupq_n_f64(q[0]);
    const float64x2_t qy = vdupq_n_f64(q[1]);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), qx);
        const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), qy);
        vst1q_f64(out + i, vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)));
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - q[0];
        const double dy = ys[i] - q[1];
        out[i] = dx * dx + dy * dy;
    }
    if (pts.dim() == 3) {
        const double* zs = pts.z.data();
        const float64x2_t qz = vdupq_n_f64(q[2]);
        i = 0;
        for (; i + 2 <= n; i += 2) {
            const float64x2_t dz = vsubq_f64(vld1q_f64(zs + i), qz);
            vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), vmulq_f64(dz, dz)));
        }
        for (; i < n; ++i) {
            const double dz = zs[i] - q[2];
            out[i] = out[i] + dz * dz;
        }
    }
}

MinResult min_squared_distance_2d_neon(const double* xs, const double* ys, std::size_t n,
                                       double qx, double qy) {
    // Element-wise work is cheap relative to the branchy reduction on NEON;
    // vectorize the distance pass and reduce in scalar order.
    MinResult best{};
    double buf[64];
    std::size_t base = 0;
    bool have = false;
    const double q[2] = {qx, qy};
    while (base < n) {
        const std::size_t len = (n - base < 64) ? n - base : 64;
        PlanarPoints chunk{{xs + base, len}, {ys + base, len}, {}};
        squared_distances_neon(chunk, q, buf);
        for (std::size_t k = 0; k < len; ++k) {
            if (!have || buf[k] < best.value) {
                best = {buf[k], base + k};
                have = true;
            }
        }
        base += len;
    }
    return best;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    const float64x2_t s = vaddq_f64(acc0, acc1);
    double acc = vgetq_lane_f64(s, 0) + vgetq_lane_f64(s, 1);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const KernelTable* neon_table() noexcept {
    static const KernelTable table{"neon", &squared_distances_neon, &min_squared_distance_2d_neon,
                                   &dot_neon};
    return &table;
}

}  // namespace revert::simd::detail

#else

namespace revert::simd::detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace revert::simd::detail

#endif
