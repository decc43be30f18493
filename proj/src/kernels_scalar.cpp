#include "kernels_internal.hpp"

// Reference kernels.  Deliberately straightforward: these define the
// semantics the vector variants are equivalence-tested against.

namespace logconc::kernels::detail {

double sum_scalar(const double* x, std::size_t n) {
    Accum a;
    for (std::size_t i = 0; i < n; ++i) a.add(x[i]);
    return a.result();
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    Accum a;
    double e = 0.0; // accumulated product roundoff, recovered via FMA
    for (std::size_t i = 0; i < n; ++i) {
        const double p = x[i] * y[i];
        e += std::fma(x[i], y[i], -p);
        a.add(p);
    }
    return a.result() + e;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void conv_scalar(const double* f, std::size_t nf,
                 const double* g, std::size_t ng, double* out) {
    for (std::size_t i = 0; i < nf; ++i) {
        const double fi = f[i];
        double* o = out + i;
        for (std::size_t j = 0; j < ng; ++j) o[j] += fi * g[j];
    }
}

} // namespace logconc::kernels::detail
