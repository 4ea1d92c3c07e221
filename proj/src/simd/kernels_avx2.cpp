// Compiled with -mavx2 -ffp-contract=off (see src/CMakeLists.txt). Only
// reached after a runtime CPU check.

#include "dispatch_internal.hpp"

#if defined(REVERT_FIELD_HAVE_AVX2)

#include <immintrin.h>

#include <cstdint>

namespace revert::simd::detail {

namespace {

void squared_distances_avx2(const PlanarPoints& pts, const double* q, double* out) {
    const std::size_t n = pts.size();
    const double* xs = pts.x.data();
    const double* ys = pts.y.data();
    const __m256d qx = _mm256_set1_pd(q[0]);
    const __m256d qy = _mm256_set1_pd(q[1]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - q[0];
        const double dy = ys[i] - q[1];
        out[i] = dx * dx + dy * dy;
    }
    if (pts.dim() == 3) {
        const double* zs = pts.z.data();
        const __m256d qz = _mm256_set1_pd(q[2]);
        i = 0;
        for (; i + 4 <= n; i += 4) {
            const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), qz);
            _mm256_storeu_pd(out + i,
                             _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_mul_pd(dz, dz)));
        }
        for (; i < n; ++i) {
            const double dz = zs[i] - q[2];
            out[i] = out[i] + dz * dz;
        }
    }
}

MinResult min_squared_distance_2d_avx2(const double* xs, const double* ys, std::size_t n,
                                       double qx, double qy) {
    std::size_t i = 0;
    MinResult best{};
    bool have = false;
    if (n >= 4) {
        const __m256d vqx = _mm256_set1_pd(qx);
        const __m256d vqy = _mm256_set1_pd(qy);
        __m256d best_v = _mm256_set1_pd(__builtin_inf());
        __m256i best_i = _mm256_set1_epi64x(0);
        __m256i idx = _mm256_setr_epi64x(0, 1, 2, 3);
        const __m256i step = _mm256_set1_epi64x(4);
        for (; i + 4 <= n; i += 4) {
            const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
            const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
            const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
            const __m256d lt = _mm256_cmp_pd(d2, best_v, _CMP_LT_OQ);
            best_v = _mm256_blendv_pd(best_v, d2, lt);
            best_i = _mm256_castpd_si256(
                _mm256_blendv_pd(_mm256_castsi256_pd(best_i), _mm256_castsi256_pd(idx), lt));
            idx = _mm256_add_epi64(idx, step);
        }
        alignas(32) double vals[4];
        alignas(32) std::int64_t ids[4];
        _mm256_store_pd(vals, best_v);
        _mm256_store_si256(reinterpret_cast<__m256i*>(ids), best_i);
        best = {vals[0], static_cast<std::size_t>(ids[0])};
        for (int lane = 1; lane < 4; ++lane) {
            const auto id = static_cast<std::size_t>(ids[lane]);
            if (vals[lane] < best.value || (vals[lane] == best.value && id < best.index)) {
                best = {vals[lane], id};
            }
        }
        have = true;
    }
    for (; i < n; ++i) {
        const double dx = xs[i] - qx;
        const double dy = ys[i] - qy;
        const double d2 = dx * dx + dy * dy;
        if (!have || d2 < best.value) {
            best = {d2, i};
            have = true;
        }
    }
    return best;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

const KernelTable* avx2_table() noexcept {
    static const KernelTable table{"avx2", &squared_distances_avx2, &min_squared_distance_2d_avx2,
                                   &dot_avx2};
    return &table;
}

}  // namespace revert::simd::detail

#else

namespace revert::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace revert::simd::detail

#endif
