#pragma once

#include "logconc/densities.hpp"
#include "logconc/grid.hpp"

// Heat semigroup u(x,t) = (f * M_{2 kappa t})(x) realized by direct dense
// convolution with a sampled Gaussian kernel on the density's own lattice.
// The grid extent grows by 8 sqrt(2 kappa t) per side while the spacing stays
// fixed, so the truncation deficit is uniform in t.  Sampling the kernel
// pointwise is spectrally accurate once its standard deviation covers two
// grid cells; below that heat_step refuses with resolution_error instead of
// returning an aliased result.

namespace logconc {

/// Dense linear convolution of two sampled densities, scaled by the cell
/// volume and renormalized.  Spacings must match; in 1D the finer grid is
/// resampled onto the coarser spacing first (cubic interpolation).
GridDensity convolve(const GridDensity& f, const GridDensity& g);

/// 2D grid from the product of two 1D factors: v(ix,iy) = fx(ix) fy(iy).
/// Convolution factors across axes for such products, which is how every
/// 2D pipeline here convolves without the dense O((NM)^2) pass.
GridDensity tensor_product(const GridDensity& fx, const GridDensity& fy);

/// Resample onto the given coarser-or-equal spacing (1D, cubic).
GridDensity resample(const GridDensity& g, double spacing);

/// f * M_{2 kappa t}; t = 0 returns f unchanged (or its discretization).
GridDensity heat_step(const GridDensity& f, double kappa, double t);
GridDensity heat_step(const AnalyticDensity& f, double kappa, double t,
                      GridSpec spec = {});

/// Immutable description of one evolution; at(t) samples it.
struct HeatEvolution {
    AnalyticDensity initial;
    double kappa = 1.0;
    GridSpec spec{};

    GridDensity at(double t) const { return heat_step(initial, kappa, t, spec); }
};

/// | dH/dt - kappa I | at time t, central difference with step dt.
double debruijn_residual(const AnalyticDensity& f, double kappa, double t,
                         double dt, GridSpec spec = {});

/// | dI/dt + 2 J | at time t with kappa = 1.
double mckean_residual(const AnalyticDensity& f, double t, double dt,
                       GridSpec spec = {});

/// L1 distance between sqrt(1+2t)^n u(x sqrt(1+2t), t) recentred to mean
/// zero and the Gaussian M_kappa, where u evolves at diffusion kappa.
double rescaled_clt_distance(const AnalyticDensity& f, double kappa, double t,
                             GridSpec spec = {});

/// L1 distance between two 1D sampled densities (cubic resample of b onto
/// a's lattice over the overlap, plus each one's mass outside it).
double l1_distance(const GridDensity& a, const GridDensity& b);

/// L1 / sup-norm distance between a sampled density and a closed form.
double l1_distance_to(const GridDensity& g, const AnalyticDensity& d);
double linf_distance_to(const GridDensity& g, const AnalyticDensity& d);

} // namespace logconc
