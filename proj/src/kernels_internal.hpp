#pragma once

#include <cmath>
#include <cstddef>

// Backend entry points shared between the dispatch layer and the per-ISA
// translation units.  Not part of the public interface.

namespace logconc::kernels::detail {

// Scalar Neumaier accumulator: running sum plus correction term.
struct Accum {
    double s = 0.0;
    double c = 0.0;
    inline void add(double x) {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
    inline double result() const { return s + c; }
};

double sum_scalar(const double* x, std::size_t n);
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
void conv_scalar(const double* f, std::size_t nf,
                 const double* g, std::size_t ng, double* out);

#if LOGCONC_HAVE_AVX2
double sum_avx2(const double* x, std::size_t n);
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
void conv_avx2(const double* f, std::size_t nf,
               const double* g, std::size_t ng, double* out);
#endif

#if LOGCONC_HAVE_NEON
double sum_neon(const double* x, std::size_t n);
double dot_neon(const double* x, const double* y, std::size_t n);
void axpy_neon(double a, const double* x, double* y, std::size_t n);
void conv_neon(const double* f, std::size_t nf,
               const double* g, std::size_t ng, double* out);
#endif

} // namespace logconc::kernels::detail
