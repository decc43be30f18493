#include "kernels_internal.hpp"

#if LOGCONC_HAVE_AVX2

#include <immintrin.h>

// AVX2 + FMA variants.  Four-lane Neumaier accumulators mirror the scalar
// rule lane by lane; lane results are merged with the scalar accumulator so
// the only difference from the reference is summation grouping.

namespace logconc::kernels::detail {

namespace {

inline __m256d abs_pd(__m256d v) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

struct Accum4 {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    inline void add(__m256d x) {
        const __m256d t   = _mm256_add_pd(s, x);
        const __m256d big = _mm256_cmp_pd(abs_pd(s), abs_pd(x), _CMP_GE_OQ);
        const __m256d lo  = _mm256_add_pd(_mm256_sub_pd(s, t), x); // |s| >= |x|
        const __m256d hi  = _mm256_add_pd(_mm256_sub_pd(x, t), s); // |x| >  |s|
        c = _mm256_add_pd(c, _mm256_blendv_pd(hi, lo, big));
        s = t;
    }
};

// o[j] += f[0]g[j] + f[1]g[j-1] + f[2]g[j-2] + f[3]g[j-3] over o[0 .. ng+3).
// Four kernel rows share one pass over the output for register reuse.
inline void conv_block4(const double* f, const double* g, std::size_t ng, double* o) {
    const __m256d f0 = _mm256_set1_pd(f[0]);
    const __m256d f1 = _mm256_set1_pd(f[1]);
    const __m256d f2 = _mm256_set1_pd(f[2]);
    const __m256d f3 = _mm256_set1_pd(f[3]);
    std::size_t j = 0;
    for (; j < 3 && j < ng + 3; ++j) {
        double t = 0.0;
        for (std::size_t k = 0; k <= j && k < 4; ++k)
            if (j - k < ng) t += f[k] * g[j - k];
        o[j] += t;
    }
    for (; j + 4 <= ng; j += 4) {
        __m256d acc = _mm256_loadu_pd(o + j);
        acc = _mm256_fmadd_pd(f0, _mm256_loadu_pd(g + j), acc);
        acc = _mm256_fmadd_pd(f1, _mm256_loadu_pd(g + j - 1), acc);
        acc = _mm256_fmadd_pd(f2, _mm256_loadu_pd(g + j - 2), acc);
        acc = _mm256_fmadd_pd(f3, _mm256_loadu_pd(g + j - 3), acc);
        _mm256_storeu_pd(o + j, acc);
    }
    for (; j < ng + 3; ++j) {
        double t = 0.0;
        for (std::size_t k = 0; k < 4; ++k)
            if (j >= k && j - k < ng) t += f[k] * g[j - k];
        o[j] += t;
    }
}

} // namespace

double sum_avx2(const double* x, std::size_t n) {
    Accum4 acc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc.add(_mm256_loadu_pd(x + i));
    alignas(32) double s4[4];
    alignas(32) double c4[4];
    _mm256_store_pd(s4, acc.s);
    _mm256_store_pd(c4, acc.c);
    Accum tail;
    for (double v : s4) tail.add(v);
    for (; i < n; ++i) tail.add(x[i]);
    return tail.result() + ((c4[0] + c4[1]) + (c4[2] + c4[3]));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    Accum4 acc;
    __m256d err = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(x + i);
        const __m256d b = _mm256_loadu_pd(y + i);
        const __m256d p = _mm256_mul_pd(a, b);
        err = _mm256_add_pd(err, _mm256_fmsub_pd(a, b, p)); // exact product tail
        acc.add(p);
    }
    alignas(32) double s4[4];
    alignas(32) double c4[4];
    alignas(32) double e4[4];
    _mm256_store_pd(s4, acc.s);
    _mm256_store_pd(c4, acc.c);
    _mm256_store_pd(e4, err);
    Accum tail;
    for (double v : s4) tail.add(v);
    double etail = 0.0;
    for (; i < n; ++i) {
        const double p = x[i] * y[i];
        etail += std::fma(x[i], y[i], -p);
        tail.add(p);
    }
    return tail.result() + ((c4[0] + c4[1]) + (c4[2] + c4[3])) +
           ((e4[0] + e4[1]) + (e4[2] + e4[3])) + etail;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d r = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                          _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void conv_avx2(const double* f, std::size_t nf,
               const double* g, std::size_t ng, double* out) {
    if (nf == 0 || ng == 0) return;
    std::size_t i = 0;
    for (; i + 4 <= nf; i += 4) conv_block4(f + i, g, ng, out + i);
    for (; i < nf; ++i) {
        const __m256d fv = _mm256_set1_pd(f[i]);
        double* o = out + i;
        std::size_t j = 0;
        for (; j + 4 <= ng; j += 4) {
            const __m256d r = _mm256_fmadd_pd(fv, _mm256_loadu_pd(g + j),
                                              _mm256_loadu_pd(o + j));
            _mm256_storeu_pd(o + j, r);
        }
        for (; j < ng; ++j) o[j] += f[i] * g[j];
    }
}

} // namespace logconc::kernels::detail

#endif // LOGCONC_HAVE_AVX2
