#include "logconc/heatflow.hpp"

#include "logconc/errors.hpp"
#include "logconc/functionals.hpp"
#include "logconc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace logconc {

namespace {

constexpr double kSpacingTol = 1e-9; // relative spacing mismatch treated as equal

bool spacing_matches(double a, double b)
{
    return std::fabs(a - b) <= kSpacingTol * std::max(a, b);
}

// Cubic Lagrange interpolation on a uniform lattice, stencil clamped at the
// ends.  Negative overshoots are clipped: the samples are a density.
double interp_cubic(const std::vector<double>& v, const GridAxis& axis, double x)
{
    if (axis.count < 4) throw contract_error("interp_cubic: need at least 4 nodes");
    const double u = (x - axis.origin) / axis.spacing;
    if (u < 0.0 || u > double(axis.count - 1)) return 0.0;
    std::size_t i0 = 0;
    if (u > 1.0) i0 = std::min(std::size_t(u - 1.0), axis.count - 4);
    const double t = u - double(i0 + 1);
    const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    const double val = wm * v[i0] + w0 * v[i0 + 1] + w1 * v[i0 + 2] + w2 * v[i0 + 3];
    return std::max(0.0, val);
}

// Sampled centred Gaussian of variance var on the given spacing, extent
// 8 standard deviations, count aligned for Simpson.  The pointwise samples
// are spectrally accurate for sd >= 2h (aliasing below 1e-8 of the mass).
GridDensity sample_kernel(double var, double h)
{
    const double sd = std::sqrt(var);
    if (sd < 2.0 * h)
        throw resolution_error("heat kernel too narrow for the grid spacing: sd = " +
                               std::to_string(sd) + ", spacing = " + std::to_string(h));
    GridDensity k;
    k.dim = 1;
    std::size_t half = std::size_t(std::ceil(8.0 * sd / h));
    std::size_t count = align_count(2 * half + 1);
    k.ax[0] = GridAxis{-double(count - 1) / 2.0 * h, h, count};
    k.v.resize(count);
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * var);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = k.ax[0].x(i);
        k.v[i] = norm * std::exp(-x * x / (2.0 * var));
    }
    k.truncation_deficit = std::erfc(8.0 / std::sqrt(2.0));
    return k;
}

std::vector<double> conv_full(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    kernels::conv_accumulate(a.data(), a.size(), b.data(), b.size(), out.data());
    return out;
}

// Linear convolution along one axis of a (possibly 2D) grid with a 1D kernel.
GridDensity conv_axis(const GridDensity& f, const GridDensity& k, int axis)
{
    const GridAxis& fa = f.ax[axis];
    if (!spacing_matches(fa.spacing, k.ax[0].spacing))
        throw contract_error("convolution spacing mismatch along axis");

    GridDensity out;
    out.dim = f.dim;
    out.ax = f.ax;
    out.ax[axis].origin = fa.origin + k.ax[0].origin;
    out.ax[axis].count = fa.count + k.ax[0].count - 1;
    out.truncation_deficit = f.truncation_deficit + k.truncation_deficit;

    const std::size_t nyf = f.ny();
    if (f.dim == 1) {
        out.v = conv_full(f.v, k.v);
        for (double& w : out.v) w *= fa.spacing;
        return out;
    }

    const std::size_t nxo = out.ax[0].count, nyo = out.ax[1].count;
    out.v.assign(nxo * nyo, 0.0);
    if (axis == 1) {
        for (std::size_t ix = 0; ix < f.ax[0].count; ++ix)
            kernels::conv_accumulate(&f.v[ix * nyf], nyf, k.v.data(), k.ax[0].count,
                                     &out.v[ix * nyo]);
    } else {
        std::vector<double> col(f.ax[0].count), res;
        for (std::size_t iy = 0; iy < nyf; ++iy) {
            for (std::size_t ix = 0; ix < f.ax[0].count; ++ix)
                col[ix] = f.v[ix * nyf + iy];
            res.assign(nxo, 0.0);
            kernels::conv_accumulate(col.data(), col.size(), k.v.data(),
                                     k.ax[0].count, res.data());
            for (std::size_t ix = 0; ix < nxo; ++ix) out.v[ix * nyo + iy] = res[ix];
        }
    }
    for (double& w : out.v) w *= fa.spacing;
    return out;
}

} // namespace

GridDensity resample(const GridDensity& g, double spacing)
{
    if (g.dim != 1) throw contract_error("resample: 1D grids only");
    if (spacing < g.ax[0].spacing * (1.0 - kSpacingTol))
        throw contract_error("resample: target spacing must not be finer");
    if (spacing_matches(spacing, g.ax[0].spacing)) return g;

    GridDensity out;
    out.dim = 1;
    std::size_t count = std::size_t((g.ax[0].upper() - g.ax[0].origin) / spacing) + 1;
    while (count % 4 != 1 && count > 5) --count;
    if (count < 5) throw contract_error("resample: grid too short for target spacing");
    out.ax[0] = GridAxis{g.ax[0].origin, spacing, count};
    out.v.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        out.v[i] = interp_cubic(g.v, g.ax[0], out.ax[0].x(i));
    // Trimmed edge strip (shorter than one cell) joins the deficit.
    const double trimmed = g.ax[0].upper() - out.ax[0].upper();
    out.truncation_deficit = g.truncation_deficit + trimmed * g.v.back();
    out.normalize();
    return out;
}

GridDensity convolve(const GridDensity& f, const GridDensity& g)
{
    if (f.dim != g.dim) throw contract_error("convolve: dimension mismatch");
    const GridDensity* a = &f;
    const GridDensity* b = &g;
    GridDensity fr, gr;
    if (!spacing_matches(f.ax[0].spacing, g.ax[0].spacing)) {
        if (f.dim != 1)
            throw contract_error("convolve: 2D inputs must share spacing");
        const double h = std::max(f.ax[0].spacing, g.ax[0].spacing);
        fr = resample(f, h);
        gr = resample(g, h);
        a = &fr;
        b = &gr;
        if (!spacing_matches(a->ax[0].spacing, b->ax[0].spacing))
            throw contract_error("convolve: spacing mismatch after resampling");
    }
    if (f.dim == 2 && !spacing_matches(f.ax[1].spacing, g.ax[1].spacing))
        throw contract_error("convolve: 2D inputs must share spacing");

    GridDensity out;
    out.dim = a->dim;
    out.truncation_deficit = a->truncation_deficit + b->truncation_deficit;
    for (int axis = 0; axis < a->dim; ++axis) {
        out.ax[axis].origin = a->ax[axis].origin + b->ax[axis].origin;
        out.ax[axis].spacing = a->ax[axis].spacing;
        out.ax[axis].count = a->ax[axis].count + b->ax[axis].count - 1;
    }

    if (a->dim == 1) {
        out.v = conv_full(a->v, b->v);
        const double h = a->ax[0].spacing;
        for (double& w : out.v) w *= h;
    } else {
        // Dense 2D pass, one row-pair 1D convolution at a time.
        const std::size_t nya = a->ny(), nyb = b->ny(), nyo = out.ax[1].count;
        out.v.assign(out.ax[0].count * nyo, 0.0);
        for (std::size_t ia = 0; ia < a->ax[0].count; ++ia)
            for (std::size_t ib = 0; ib < b->ax[0].count; ++ib)
                kernels::conv_accumulate(&a->v[ia * nya], nya, &b->v[ib * nyb], nyb,
                                         &out.v[(ia + ib) * nyo]);
        const double cell = a->ax[0].spacing * a->ax[1].spacing;
        for (double& w : out.v) w *= cell;
    }
    out.normalize();
    return out;
}

GridDensity tensor_product(const GridDensity& fx, const GridDensity& fy)
{
    if (fx.dim != 1 || fy.dim != 1)
        throw contract_error("tensor_product: factors must be 1D");
    GridDensity out;
    out.dim = 2;
    out.ax[0] = fx.ax[0];
    out.ax[1] = fy.ax[0];
    out.truncation_deficit = fx.truncation_deficit + fy.truncation_deficit;
    out.v.resize(fx.size() * fy.size());
    for (std::size_t ix = 0; ix < fx.size(); ++ix)
        for (std::size_t iy = 0; iy < fy.size(); ++iy)
            out.v[ix * fy.size() + iy] = fx.v[ix] * fy.v[iy];
    out.normalize();
    return out;
}

GridDensity heat_step(const GridDensity& f, double kappa, double t)
{
    if (kappa <= 0.0) throw domain_error("heat_step: kappa must be positive");
    if (t < 0.0) throw domain_error("heat_step: negative time");
    if (t == 0.0) return f;
    GridDensity out = f;
    for (int axis = 0; axis < f.dim; ++axis) {
        const GridDensity k = sample_kernel(2.0 * kappa * t, f.ax[axis].spacing);
        out = conv_axis(out, k, axis);
    }
    out.normalize();
    return out;
}

GridDensity heat_step(const AnalyticDensity& f, double kappa, double t, GridSpec spec)
{
    const GridDensity g = discretize(f, spec);
    return heat_step(g, kappa, t);
}

double debruijn_residual(const AnalyticDensity& f, double kappa, double t,
                         double dt, GridSpec spec)
{
    if (dt <= 0.0 || t < dt)
        throw precondition_error("debruijn_residual: need 0 < dt <= t");
    const GridDensity base = discretize(f, spec);
    const double h_plus = functionals_grid(heat_step(base, kappa, t + dt)).entropy;
    const double h_minus = functionals_grid(heat_step(base, kappa, t - dt)).entropy;
    const double fisher = functionals_grid(heat_step(base, kappa, t)).fisher;
    return std::fabs((h_plus - h_minus) / (2.0 * dt) - kappa * fisher);
}

double mckean_residual(const AnalyticDensity& f, double t, double dt, GridSpec spec)
{
    if (dt <= 0.0 || t < dt)
        throw precondition_error("mckean_residual: need 0 < dt <= t");
    const GridDensity base = discretize(f, spec);
    const double i_plus = functionals_grid(heat_step(base, 1.0, t + dt)).fisher;
    const double i_minus = functionals_grid(heat_step(base, 1.0, t - dt)).fisher;
    const double second = functionals_grid(heat_step(base, 1.0, t)).fisher_second;
    return std::fabs((i_plus - i_minus) / (2.0 * dt) + 2.0 * second);
}

double rescaled_clt_distance(const AnalyticDensity& f, double kappa, double t,
                             GridSpec spec)
{
    if (t <= 0.0) throw domain_error("rescaled_clt_distance: need t > 0");
    GridDensity u = heat_step(f, kappa, t, spec);
    GridDensity scaled = dilate(u, std::sqrt(1.0 + 2.0 * t));
    scaled.recentre();
    return l1_distance_to(scaled, make_gaussian(kappa, f.dim));
}

double l1_distance(const GridDensity& a, const GridDensity& b)
{
    if (a.dim != 1 || b.dim != 1) throw contract_error("l1_distance: 1D grids only");
    const GridAxis& ax = a.ax[0];
    const double lo = std::max(ax.origin, b.ax[0].origin);
    const double hi = std::min(ax.upper(), b.ax[0].upper());
    if (hi <= lo) throw contract_error("l1_distance: grids do not overlap");

    double dist = 0.0;
    const std::size_t k0 = std::size_t(std::ceil((lo - ax.origin) / ax.spacing - 1e-12));
    const std::size_t k1 = std::size_t(std::floor((hi - ax.origin) / ax.spacing + 1e-12));
    for (std::size_t k = k0; k <= k1; ++k) {
        const double w = (k == k0 || k == k1) ? 0.5 : 1.0;
        dist += w * std::fabs(a.v[k] - interp_cubic(b.v, b.ax[0], ax.x(k))) * ax.spacing;
    }
    // Mass living outside the overlap window counts in full.
    auto outside = [lo, hi](const GridDensity& g) {
        double m = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.ax[0].x(i);
            if (x < lo || x > hi) m += g.v[i] * g.ax[0].spacing;
        }
        return m;
    };
    return dist + outside(a) + outside(b);
}

double l1_distance_to(const GridDensity& g, const AnalyticDensity& d)
{
    if (g.dim != d.dim) throw contract_error("l1_distance_to: dimension mismatch");
    std::vector<double> diff(g.size());
    if (g.dim == 1) {
        for (std::size_t i = 0; i < g.size(); ++i)
            diff[i] = std::fabs(g.v[i] - d.density(g.ax[0].x(i)));
    } else {
        for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
            for (std::size_t iy = 0; iy < g.ax[1].count; ++iy)
                diff[ix * g.ny() + iy] =
                    std::fabs(g.at(ix, iy) - d.density(g.ax[0].x(ix), g.ax[1].x(iy)));
    }
    double dist = integrate_trapezoid(g, diff);
    // The closed form keeps mass beyond the window where the grid is zero.
    for (int axis = 0; axis < d.dim; ++axis)
        dist += d.factor[axis].tail_below(g.ax[axis].origin) +
                d.factor[axis].tail_above(g.ax[axis].upper());
    return dist;
}

double linf_distance_to(const GridDensity& g, const AnalyticDensity& d)
{
    if (g.dim != d.dim) throw contract_error("linf_distance_to: dimension mismatch");
    double worst = 0.0;
    if (g.dim == 1) {
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, std::fabs(g.v[i] - d.density(g.ax[0].x(i))));
    } else {
        for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
            for (std::size_t iy = 0; iy < g.ax[1].count; ++iy)
                worst = std::max(worst, std::fabs(g.at(ix, iy) -
                                                  d.density(g.ax[0].x(ix), g.ax[1].x(iy))));
    }
    return worst;
}

} // namespace logconc
