#pragma once

#include <cstddef>

// Low-level numeric kernels: compensated reductions and dense convolution.
// Every operation has a scalar reference implementation and, where the build
// and host CPU allow it, a vectorized variant selected once at startup.
// Results are deterministic for a fixed backend; scalar and vector variants
// agree up to roundoff-level reassociation differences.

namespace logconc::kernels {

enum class Backend { scalar, avx2, neon };

/// Backend currently in use (CPU detection, LOGCONC_KERNELS override).
Backend active_backend();

/// Short backend name: "scalar", "avx2", "neon".
const char* backend_name(Backend b);

/// True if this build and CPU can execute the given backend.
bool backend_supported(Backend b);

/// Select a backend explicitly; throws std::invalid_argument if unsupported.
void force_backend(Backend b);

/// Redo automatic selection (honors the LOGCONC_KERNELS environment variable).
void reset_backend();

/// Compensated (Neumaier) sum of x[0..n).
double sum(const double* x, std::size_t n);

/// Compensated dot product; product roundoff is recovered with FMA.
double dot(const double* x, const double* y, std::size_t n);

/// y[i] += a * x[i] for i in [0, n).
void axpy(double a, const double* x, double* y, std::size_t n);

/// Dense linear convolution accumulate: out[i+j] += f[i] * g[j].
/// out must have at least nf + ng - 1 entries and is not cleared first.
void conv_accumulate(const double* f, std::size_t nf,
                     const double* g, std::size_t ng, double* out);

} // namespace logconc::kernels
