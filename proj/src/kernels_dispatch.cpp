#include "logconc/kernels.hpp"

#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace logconc::kernels {

namespace {

bool cpu_has_avx2() {
#if LOGCONC_HAVE_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() {
    if (const char* e = std::getenv("LOGCONC_KERNELS")) {
        if (std::strcmp(e, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(e, "avx2") == 0 && backend_supported(Backend::avx2))
            return Backend::avx2;
        if (std::strcmp(e, "neon") == 0 && backend_supported(Backend::neon))
            return Backend::neon;
        // Unknown or unsupported request: fall through to detection.
    }
#if LOGCONC_HAVE_AVX2
    if (cpu_has_avx2()) return Backend::avx2;
#endif
#if LOGCONC_HAVE_NEON
    return Backend::neon;
#endif
    return Backend::scalar;
}

std::atomic<Backend>& state() {
    static std::atomic<Backend> b{detect()};
    return b;
}

} // namespace

Backend active_backend() { return state().load(std::memory_order_relaxed); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
        case Backend::neon:
#if LOGCONC_HAVE_NEON
            return true;
#else
            return false;
#endif
    }
    return false;
}

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw std::invalid_argument(std::string("kernel backend not available: ") +
                                    backend_name(b));
    state().store(b, std::memory_order_relaxed);
}

void reset_backend() { state().store(detect(), std::memory_order_relaxed); }

double sum(const double* x, std::size_t n) {
    switch (active_backend()) {
#if LOGCONC_HAVE_AVX2
        case Backend::avx2: return detail::sum_avx2(x, n);
#endif
#if LOGCONC_HAVE_NEON
        case Backend::neon: return detail::sum_neon(x, n);
#endif
        default: return detail::sum_scalar(x, n);
    }
}

double dot(const double* x, const double* y, std::size_t n) {
    switch (active_backend()) {
#if LOGCONC_HAVE_AVX2
        case Backend::avx2: return detail::dot_avx2(x, y, n);
#endif
#if LOGCONC_HAVE_NEON
        case Backend::neon: return detail::dot_neon(x, y, n);
#endif
        default: return detail::dot_scalar(x, y, n);
    }
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    switch (active_backend()) {
#if LOGCONC_HAVE_AVX2
        case Backend::avx2: return detail::axpy_avx2(a, x, y, n);
#endif
#if LOGCONC_HAVE_NEON
        case Backend::neon: return detail::axpy_neon(a, x, y, n);
#endif
        default: return detail::axpy_scalar(a, x, y, n);
    }
}

void conv_accumulate(const double* f, std::size_t nf,
                     const double* g, std::size_t ng, double* out) {
    switch (active_backend()) {
#if LOGCONC_HAVE_AVX2
        case Backend::avx2: return detail::conv_avx2(f, nf, g, ng, out);
#endif
#if LOGCONC_HAVE_NEON
        case Backend::neon: return detail::conv_neon(f, nf, g, ng, out);
#endif
        default: return detail::conv_scalar(f, nf, g, ng, out);
    }
}

} // namespace logconc::kernels
