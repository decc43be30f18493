#include "kernels_internal.hpp"

#if LOGCONC_HAVE_NEON

#include <arm_neon.h>

// NEON variants (aarch64).  Two-lane mirror of the AVX2 structure; lanes are
// merged with the scalar accumulator rule.

namespace logconc::kernels::detail {

namespace {

struct Accum2 {
    float64x2_t s = vdupq_n_f64(0.0);
    float64x2_t c = vdupq_n_f64(0.0);
    inline void add(float64x2_t x) {
        const float64x2_t t   = vaddq_f64(s, x);
        const uint64x2_t  big = vcgeq_f64(vabsq_f64(s), vabsq_f64(x));
        const float64x2_t lo  = vaddq_f64(vsubq_f64(s, t), x); // |s| >= |x|
        const float64x2_t hi  = vaddq_f64(vsubq_f64(x, t), s); // |x| >  |s|
        c = vaddq_f64(c, vbslq_f64(big, lo, hi));
        s = t;
    }
};

} // namespace

double sum_neon(const double* x, std::size_t n) {
    Accum2 acc;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc.add(vld1q_f64(x + i));
    Accum tail;
    tail.add(vgetq_lane_f64(acc.s, 0));
    tail.add(vgetq_lane_f64(acc.s, 1));
    for (; i < n; ++i) tail.add(x[i]);
    return tail.result() + vgetq_lane_f64(acc.c, 0) + vgetq_lane_f64(acc.c, 1);
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    Accum2 acc;
    float64x2_t err = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t a = vld1q_f64(x + i);
        const float64x2_t b = vld1q_f64(y + i);
        const float64x2_t p = vmulq_f64(a, b);
        err = vaddq_f64(err, vfmaq_f64(vnegq_f64(p), a, b)); // a*b - p exactly
        acc.add(p);
    }
    Accum tail;
    tail.add(vgetq_lane_f64(acc.s, 0));
    tail.add(vgetq_lane_f64(acc.s, 1));
    double etail = 0.0;
    for (; i < n; ++i) {
        const double p = x[i] * y[i];
        etail += std::fma(x[i], y[i], -p);
        tail.add(p);
    }
    return tail.result() + vgetq_lane_f64(acc.c, 0) + vgetq_lane_f64(acc.c, 1) +
           vgetq_lane_f64(err, 0) + vgetq_lane_f64(err, 1) + etail;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void conv_neon(const double* f, std::size_t nf,
               const double* g, std::size_t ng, double* out) {
    if (nf == 0 || ng == 0) return;
    for (std::size_t i = 0; i < nf; ++i) {
        const float64x2_t fv = vdupq_n_f64(f[i]);
        double* o = out + i;
        std::size_t j = 0;
        for (; j + 2 <= ng; j += 2)
            vst1q_f64(o + j, vfmaq_f64(vld1q_f64(o + j), fv, vld1q_f64(g + j)));
        for (; j < ng; ++j) o[j] += f[i] * g[j];
    }
}

} // namespace logconc::kernels::detail

#endif // LOGCONC_HAVE_NEON
