#include "neuroeco/kernels.hpp"

#include "neighbor_pair.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define NEUROECO_HAVE_AVX2 1
#endif

namespace neuroeco::kernels {

#ifdef NEUROECO_HAVE_AVX2
namespace {

#define AVX2 __attribute__((target("avx2")))

AVX2 double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

AVX2 void row_sum3(const double* src, double* dst, std::size_t n) {
    dst[0] = (src[n - 1] + src[0]) + src[1];
    std::size_t x = 1;
    for (; x + 4 < n; x += 4) {
        __m256d l = _mm256_loadu_pd(src + x - 1);
        __m256d c = _mm256_loadu_pd(src + x);
        __m256d r = _mm256_loadu_pd(src + x + 1);
        _mm256_storeu_pd(dst + x, _mm256_add_pd(_mm256_add_pd(l, c), r));
    }
    for (; x + 1 < n; ++x) dst[x] = (src[x - 1] + src[x]) + src[x + 1];
    dst[n - 1] = (src[n - 2] + src[n - 1]) + src[0];
}

AVX2 void col_sum3_scale(const double* a, const double* b, const double* c, double* dst,
                         std::size_t n, double scale) {
    const __m256d s = _mm256_set1_pd(scale);
    std::size_t x = 0;
    for (; x + 4 <= n; x += 4) {
        __m256d sum = _mm256_add_pd(_mm256_loadu_pd(a + x), _mm256_loadu_pd(b + x));
        sum = _mm256_add_pd(sum, _mm256_loadu_pd(c + x));
        _mm256_storeu_pd(dst + x, _mm256_mul_pd(sum, s));
    }
    for (; x < n; ++x) dst[x] = ((a[x] + b[x]) + c[x]) * scale;
}

AVX2 void add_scaled(double* dst, const double* src, double a, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(src + i));
        _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
    }
    for (; i < n; ++i) dst[i] += a * src[i];
}

AVX2 double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1,
                             _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

AVX2 __m256d wrap(__m256d d, __m256d half, __m256d neg_half, __m256d extent) {
    d = _mm256_blendv_pd(d, _mm256_sub_pd(d, extent), _mm256_cmp_pd(d, half, _CMP_GT_OQ));
    return _mm256_blendv_pd(d, _mm256_add_pd(d, extent), _mm256_cmp_pd(d, neg_half, _CMP_LT_OQ));
}

AVX2 void neighbor_sums(const NeighborQuery& q, const double* xs, const double* ys,
                        const double* vxs, const double* vys, std::size_t n,
                        NeighborSums& out) {
    const __m256d qx = _mm256_set1_pd(q.x), qy = _mm256_set1_pd(q.y);
    const __m256d w = _mm256_set1_pd(q.world_w), h = _mm256_set1_pd(q.world_h);
    const __m256d hw = _mm256_set1_pd(0.5 * q.world_w), hh = _mm256_set1_pd(0.5 * q.world_h);
    const __m256d nhw = _mm256_set1_pd(-0.5 * q.world_w), nhh = _mm256_set1_pd(-0.5 * q.world_h);
    const __m256d rn2 = _mm256_set1_pd(q.r_neighbor2), rs2 = _mm256_set1_pd(q.r_sep2);
    const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0);

    __m256d count = zero, ox = zero, oy = zero, vx = zero, vy = zero, sx = zero, sy = zero;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d dx = wrap(_mm256_sub_pd(_mm256_loadu_pd(xs + j), qx), hw, nhw, w);
        __m256d dy = wrap(_mm256_sub_pd(_mm256_loadu_pd(ys + j), qy), hh, nhh, h);
        __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
        __m256d near = _mm256_and_pd(_mm256_cmp_pd(d2, zero, _CMP_GT_OQ),
                                     _mm256_cmp_pd(d2, rn2, _CMP_LT_OQ));
        if (_mm256_movemask_pd(near) == 0) continue;
        count = _mm256_add_pd(count, _mm256_and_pd(near, one));
        ox = _mm256_add_pd(ox, _mm256_and_pd(near, dx));
        oy = _mm256_add_pd(oy, _mm256_and_pd(near, dy));
        vx = _mm256_add_pd(vx, _mm256_and_pd(near, _mm256_loadu_pd(vxs + j)));
        vy = _mm256_add_pd(vy, _mm256_and_pd(near, _mm256_loadu_pd(vys + j)));
        __m256d close = _mm256_and_pd(near, _mm256_cmp_pd(d2, rs2, _CMP_LT_OQ));
        if (_mm256_movemask_pd(close) != 0) {
            sx = _mm256_sub_pd(sx, _mm256_and_pd(close, _mm256_div_pd(dx, d2)));
            sy = _mm256_sub_pd(sy, _mm256_and_pd(close, _mm256_div_pd(dy, d2)));
        }
    }
    out.count += hsum(count);
    out.offset_x += hsum(ox);
    out.offset_y += hsum(oy);
    out.vel_x += hsum(vx);
    out.vel_y += hsum(vy);
    out.sep_x += hsum(sx);
    out.sep_y += hsum(sy);
    for (; j < n; ++j) accumulate_pair(q, xs[j], ys[j], vxs[j], vys[j], out);
}

#undef AVX2

}  // namespace

const KernelTable* avx2() {
    static const KernelTable table{"avx2", row_sum3, col_sum3_scale, add_scaled, dot,
                                   neighbor_sums};
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &table : nullptr;
}

#else

const KernelTable* avx2() { return nullptr; }

#endif

}  // namespace neuroeco::kernels
