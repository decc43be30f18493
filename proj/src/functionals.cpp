#include "logconc/functionals.hpp"

#include "logconc/errors.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace logconc {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Sampled log density with the stencil usability mask.  A point is usable
// when the full 4th-order stencil window around it (5 points per axis, the
// 5x5 square in 2D so nested mixed stencils are covered too) stays strictly
// above the positivity floor.
struct LogField {
    std::vector<double> L;
    std::vector<std::uint8_t> ok;  // above floor
    std::vector<std::uint8_t> use; // stencil window ok and in range
    double lmax = 0.0;             // max |L| over ok points
};

LogField make_log_field(const GridDensity& g) {
    const double floor = kFloorRel * g.max_value();
    const std::size_t nx = g.ax[0].count, nyc = g.ny();
    LogField f;
    f.L.assign(g.size(), 0.0);
    f.ok.assign(g.size(), 0);
    f.use.assign(g.size(), 0);
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.v[p] > floor) {
            f.ok[p] = 1;
            f.L[p] = std::log(g.v[p]);
            f.lmax = std::max(f.lmax, std::fabs(f.L[p]));
        }
    }
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            bool u = ix >= 2 && ix + 2 < nx;
            if (g.dim == 2) u = u && iy >= 2 && iy + 2 < nyc;
            if (u && g.dim == 1) {
                for (int k = -2; k <= 2 && u; ++k)
                    u = f.ok[std::size_t(std::ptrdiff_t(ix) + k)];
            } else if (u) {
                for (int a = -2; a <= 2 && u; ++a)
                    for (int b = -2; b <= 2 && u; ++b)
                        u = f.ok[std::size_t(std::ptrdiff_t(ix) + a) * nyc +
                                 std::size_t(std::ptrdiff_t(iy) + b)];
            }
            f.use[ix * nyc + iy] = u ? 1 : 0;
        }
    }
    return f;
}

// Centered 4th-order stencils plus the 2nd-order ones used as truncation
// error proxies: |4th - 2nd| dominates the 4th-order stencil's own error
// (and vanishes identically on quadratic log densities).
inline double stencil_d1(const double* p, std::ptrdiff_t s, double h) {
    return (p[-2 * s] - 8.0 * p[-s] + 8.0 * p[s] - p[2 * s]) / (12.0 * h);
}

inline double stencil_d1_lo(const double* p, std::ptrdiff_t s, double h) {
    return (p[s] - p[-s]) / (2.0 * h);
}

inline double stencil_d2(const double* p, std::ptrdiff_t s, double h) {
    return (-p[-2 * s] + 16.0 * p[-s] - 30.0 * p[0] + 16.0 * p[s] - p[2 * s]) /
           (12.0 * h * h);
}

inline double stencil_d2_lo(const double* p, std::ptrdiff_t s, double h) {
    return (p[s] - 2.0 * p[0] + p[-s]) / (h * h);
}

inline double stencil_d12(const double* p, std::ptrdiff_t sx, std::ptrdiff_t sy,
                          double hx, double hy) {
    auto gx = [&](int oy) {
        const double* q = p + oy * sy;
        return (q[-2 * sx] - 8.0 * q[-sx] + 8.0 * q[sx] - q[2 * sx]) / (12.0 * hx);
    };
    return (gx(-2) - 8.0 * gx(-1) + 8.0 * gx(1) - gx(2)) / (12.0 * hy);
}

inline double stencil_d12_lo(const double* p, std::ptrdiff_t sx, std::ptrdiff_t sy,
                             double hx, double hy) {
    return (p[sx + sy] - p[sx - sy] - p[-sx + sy] + p[-sx - sy]) /
           (4.0 * hx * hy);
}

// One-sided 4-point stencils (3rd/2nd order), for estimating the integrand
// on the strip where centered stencils have no room.
inline double oneside_d1(const double* p, std::ptrdiff_t s, double h) {
    return (-11.0 * p[0] + 18.0 * p[s] - 9.0 * p[2 * s] + 2.0 * p[3 * s]) / (6.0 * h);
}

inline double oneside_d2(const double* p, std::ptrdiff_t s, double h) {
    return (2.0 * p[0] - 5.0 * p[s] + 4.0 * p[2 * s] - p[3 * s]) / (h * h);
}

struct Integrands {
    std::vector<double> H, I, J, A12, Wxx, Wyy;
    std::vector<double> noiseI, noiseJ, noiseA12, noiseXX, noiseYY;
    std::vector<std::uint8_t> evalH, evalIJ, okH, okIJ, covered;
    double marginI = 0.0, marginJ = 0.0, marginA12 = 0.0;
};

// Full error budget for one functional integral:
//   Richardson h-refinement gap (order-robust, see integrate_with_error)
// + pointwise stencil/roundoff noise integrated over the grid
// + caller margin (one-sided strip estimates, edge extrapolation slack)
// + weight-bound fallback for excluded points no margin accounted for
// + tail truncation at the largest evaluated weight with growth allowance
// + a floor for effects below refinement resolution.
ValueErr budgeted_integral(const GridDensity& g, const std::vector<double>& W,
                           const std::vector<double>& noise,
                           const std::vector<std::uint8_t>& evaluated,
                           const std::vector<std::uint8_t>& ok,
                           const std::vector<std::uint8_t>& covered, double margin) {
    ValueErr ve = integrate_with_error(g, W);
    double err = ve.error + margin;
    const double cell = g.ax[0].spacing * (g.dim == 2 ? g.ax[1].spacing : 1.0);

    if (!noise.empty()) {
        double acc = 0.0;
        for (double x : noise) acc += x;
        err += acc * cell;
    }

    double wmax = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
        if (evaluated[p] && g.v[p] > 0.0)
            wmax = std::max(wmax, std::fabs(W[p]) / g.v[p]);

    for (std::size_t p = 0; p < g.size(); ++p) {
        if (!ok[p] || evaluated[p]) continue;
        if (!covered.empty() && covered[p]) continue;
        err += 2.0 * wmax * g.v[p] * cell;
    }

    err += 4.0 * g.truncation_deficit * wmax;
    err += 1e-12 * std::fabs(ve.value);
    return {ve.value, err};
}

// Grid path: stencil derivatives of sampled log f.
Integrands build_grid_integrands(const GridDensity& g, const LogField& F) {
    const std::size_t nx = g.ax[0].count, nyc = g.ny();
    const double hx = g.ax[0].spacing, hy = g.dim == 2 ? g.ax[1].spacing : 1.0;
    Integrands out;
    out.H.assign(g.size(), 0.0);
    out.I.assign(g.size(), 0.0);
    out.J.assign(g.size(), 0.0);
    out.A12.assign(g.size(), 0.0);
    out.noiseI.assign(g.size(), 0.0);
    out.noiseJ.assign(g.size(), 0.0);
    out.noiseA12.assign(g.size(), 0.0);
    out.evalH.assign(g.size(), 0);
    out.evalIJ = F.use;
    out.okH.assign(g.size(), 0);
    out.okIJ = F.ok;
    out.covered.assign(g.size(), 0);
    if (g.dim == 2) {
        out.Wxx.assign(g.size(), 0.0);
        out.Wyy.assign(g.size(), 0.0);
        out.noiseXX.assign(g.size(), 0.0);
        out.noiseYY.assign(g.size(), 0.0);
    }

    // entropy needs no stencil: -v log v extends continuously with 0 at v = 0
    for (std::size_t p = 0; p < g.size(); ++p) {
        if (g.v[p] > 0.0) {
            out.H[p] = -g.v[p] * std::log(g.v[p]);
            out.evalH[p] = 1;
        }
        out.okH[p] = out.evalH[p];
    }

    // fd roundoff per stencil: |coefficient| sums are 18/12 for the first
    // derivative and 64/12 for the second
    const double n1x = kEps * (1.0 + F.lmax) * 1.5 / hx;
    const double n2x = kEps * (1.0 + F.lmax) * (64.0 / 12.0) / (hx * hx);
    const double n1y = kEps * (1.0 + F.lmax) * 1.5 / hy;
    const double n2y = kEps * (1.0 + F.lmax) * (64.0 / 12.0) / (hy * hy);

    const std::ptrdiff_t sx = std::ptrdiff_t(nyc), sy = 1;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            const std::size_t p = ix * nyc + iy;
            if (!F.use[p]) continue;
            const double* Lp = F.L.data() + p;
            const double v = g.v[p];
            const double lx = stencil_d1(Lp, sx, hx);
            const double cxx = stencil_d2(Lp, sx, hx);
            const double e1x = n1x + std::fabs(lx - stencil_d1_lo(Lp, sx, hx));
            const double e2x = n2x + std::fabs(cxx - stencil_d2_lo(Lp, sx, hx));
            if (g.dim == 1) {
                out.I[p] = lx * lx * v;
                out.J[p] = cxx * cxx * v;
                out.noiseI[p] = 2.0 * std::fabs(lx) * e1x * v;
                out.noiseJ[p] = 2.0 * std::fabs(cxx) * e2x * v;
            } else {
                const double ly = stencil_d1(Lp, sy, hy);
                const double cyy = stencil_d2(Lp, sy, hy);
                const double cxy = stencil_d12(Lp, sx, sy, hx, hy);
                const double e1y = n1y + std::fabs(ly - stencil_d1_lo(Lp, sy, hy));
                const double e2y = n2y + std::fabs(cyy - stencil_d2_lo(Lp, sy, hy));
                const double e12 =
                    n1x + n1y +
                    std::fabs(cxy - stencil_d12_lo(Lp, sx, sy, hx, hy));
                out.I[p] = (lx * lx + ly * ly) * v;
                out.J[p] = (cxx * cxx + cyy * cyy + 2.0 * cxy * cxy) * v;
                out.A12[p] = lx * ly * v;
                out.Wxx[p] = lx * lx * v;
                out.Wyy[p] = ly * ly * v;
                out.noiseI[p] = 2.0 * (std::fabs(lx) * e1x + std::fabs(ly) * e1y) * v;
                out.noiseJ[p] = 2.0 *
                                (std::fabs(cxx) * e2x + std::fabs(cyy) * e2y +
                                 2.0 * std::fabs(cxy) * e12) *
                                v;
                out.noiseA12[p] = (std::fabs(lx) * e1y + std::fabs(ly) * e1x) * v;
                out.noiseXX[p] = 2.0 * std::fabs(lx) * e1x * v;
                out.noiseYY[p] = 2.0 * std::fabs(ly) * e1y * v;
            }
        }
    }

    // 1D strip near a support edge: estimate the skipped integrand and carry
    // it as margin, doubled for safety.  Two estimators, take the larger:
    // one-sided stencils on log f, and linear extrapolation of the evaluated
    // integrand itself (stabler when log-derivatives blow up at the edge but
    // the f-weighted integrand stays tame).  2D strips fall back to the
    // weight bound inside budgeted_integral.
    if (g.dim == 1) {
        auto strip_extrap = [&](const std::vector<double>& W, std::size_t i,
                                std::ptrdiff_t s) -> double {
            std::ptrdiff_t a = std::ptrdiff_t(i);
            for (int step = 0; step < 6; ++step) {
                a += s;
                if (a < 0 || a >= std::ptrdiff_t(nx)) return 0.0;
                if (F.use[std::size_t(a)]) break;
            }
            if (a < 0 || a >= std::ptrdiff_t(nx) || !F.use[std::size_t(a)]) return 0.0;
            const double dist = double(s > 0 ? a - std::ptrdiff_t(i)
                                             : std::ptrdiff_t(i) - a);
            const std::ptrdiff_t b = a + s;
            double w;
            if (b >= 0 && b < std::ptrdiff_t(nx) && F.use[std::size_t(b)])
                w = (1.0 + dist) * W[std::size_t(a)] - dist * W[std::size_t(b)];
            else
                w = (1.0 + dist) * W[std::size_t(a)];
            return std::max(0.0, w);
        };
        for (std::size_t i = 0; i < nx; ++i) {
            if (!F.ok[i] || F.use[i]) continue;
            std::ptrdiff_t s = 0;
            if (i + 3 < nx && F.ok[i + 1] && F.ok[i + 2] && F.ok[i + 3])
                s = 1;
            else if (i >= 3 && F.ok[i - 1] && F.ok[i - 2] && F.ok[i - 3])
                s = -1;
            if (s == 0) continue;
            const double* Lp = F.L.data() + i;
            const double d1s = oneside_d1(Lp, s, hx);
            const double d2s = oneside_d2(Lp, s, hx);
            const double wI = std::max(d1s * d1s * g.v[i], strip_extrap(out.I, i, s));
            const double wJ = std::max(d2s * d2s * g.v[i], strip_extrap(out.J, i, s));
            out.marginI += 2.0 * wI * hx;
            out.marginJ += 2.0 * wJ * hx;
            out.covered[i] = 1;
        }
    }
    return out;
}

// Analytic path: potential derivatives evaluated at the grid nodes.  Product
// structure makes the Hessian diagonal, so J has no mixed term.
Integrands build_analytic_integrands(const AnalyticDensity& d, const GridDensity& g) {
    const std::size_t nx = g.ax[0].count, nyc = g.ny();
    Integrands out;
    out.H.assign(g.size(), 0.0);
    out.I.assign(g.size(), 0.0);
    out.J.assign(g.size(), 0.0);
    out.A12.assign(g.size(), 0.0);
    out.evalH.assign(g.size(), 0);
    out.evalIJ.assign(g.size(), 0);
    if (g.dim == 2) {
        out.Wxx.assign(g.size(), 0.0);
        out.Wyy.assign(g.size(), 0.0);
    }

    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double x = g.ax[0].x(ix);
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            const std::size_t p = ix * nyc + iy;
            const double v = g.v[p];
            if (v <= 0.0) continue;
            const double y = g.dim == 2 ? g.ax[1].x(iy) : 0.0;
            const double phi = d.phi(x, y);
            const double dx = d.factor[0].dphi(x);
            const double cxx = d.factor[0].d2phi(x);
            out.H[p] = phi * v;
            if (g.dim == 1) {
                out.I[p] = dx * dx * v;
                out.J[p] = cxx * cxx * v;
            } else {
                const double dy = d.factor[1].dphi(y);
                const double cyy = d.factor[1].d2phi(y);
                out.I[p] = (dx * dx + dy * dy) * v;
                out.J[p] = (cxx * cxx + cyy * cyy) * v;
                out.A12[p] = dx * dy * v;
                out.Wxx[p] = dx * dx * v;
                out.Wyy[p] = dy * dy * v;
            }
            out.evalH[p] = 1;
            out.evalIJ[p] = 1;
        }
    }
    out.okH = out.evalH;
    out.okIJ = out.evalIJ;

    // A density vanishing at its support edge can still contribute there:
    // the weight-times-density limit need not be zero (it is 2/3 for the
    // curvature integrand of the shape-5 gamma).  Extrapolate the integrand
    // onto edge nodes quadratically (exact for the linear and quadratic
    // onsets of integer-shape families) and carry the full magnitude plus
    // the local differences as margin, since fractional-power onsets make
    // any polynomial extrapolant unsafe.
    auto edge_value = [](double w1, double w2, double w3, double& slack) {
        const double ext = std::max(0.0, 3.0 * w1 - 3.0 * w2 + w3);
        slack = ext + std::fabs(w1 - w2) + std::fabs(w1 - 2.0 * w2 + w3);
        return ext;
    };
    auto extrapolate_edge = [&](std::vector<double>& W, double& margin) {
        if (g.dim == 1) {
            if (g.v[0] <= 0.0 && g.v[1] > 0.0 && g.v[2] > 0.0 && g.v[3] > 0.0) {
                double slack = 0.0;
                W[0] = edge_value(W[1], W[2], W[3], slack);
                margin += slack * g.ax[0].spacing / 3.0;
            }
            return;
        }
        const double hx = g.ax[0].spacing, hy = g.ax[1].spacing;
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            const std::size_t p0 = 0 * nyc + iy, p1 = p0 + nyc, p2 = p1 + nyc,
                              p3 = p2 + nyc;
            if (g.v[p0] <= 0.0 && g.v[p1] > 0.0 && g.v[p2] > 0.0 && g.v[p3] > 0.0) {
                double slack = 0.0;
                W[p0] = edge_value(W[p1], W[p2], W[p3], slack);
                margin += slack * (hx / 3.0) * hy * 1.5;
            }
        }
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t p0 = ix * nyc + 0, p1 = p0 + 1, p2 = p0 + 2, p3 = p0 + 3;
            if (g.v[p0] <= 0.0 && g.v[p1] > 0.0 && g.v[p2] > 0.0 && g.v[p3] > 0.0) {
                double slack = 0.0;
                W[p0] = edge_value(W[p1], W[p2], W[p3], slack);
                margin += slack * (hy / 3.0) * hx * 1.5;
            }
        }
    };
    extrapolate_edge(out.I, out.marginI);
    extrapolate_edge(out.J, out.marginJ);
    if (g.dim == 2) {
        double mxx = 0.0, myy = 0.0;
        extrapolate_edge(out.Wxx, mxx);
        extrapolate_edge(out.Wyy, myy);
        extrapolate_edge(out.A12, out.marginA12);
        out.marginI = std::max(out.marginI, mxx + myy);
    }
    return out;
}

FunctionalReport assemble_report(const GridDensity& g, const Integrands& in) {
    FunctionalReport r;
    r.dim = g.dim;
    r.points = g.size();
    r.spacing = g.ax[0].spacing;
    if (g.dim == 2) r.spacing = std::max(r.spacing, g.ax[1].spacing);

    const std::vector<double> none;
    ValueErr H = budgeted_integral(g, in.H, none, in.evalH, in.okH, in.covered, 0.0);
    ValueErr I = budgeted_integral(g, in.I, in.noiseI, in.evalIJ, in.okIJ, in.covered,
                                   in.marginI);
    ValueErr J = budgeted_integral(g, in.J, in.noiseJ, in.evalIJ, in.okIJ, in.covered,
                                   in.marginJ);
    r.entropy = H.value;
    r.err_entropy = H.error;
    r.fisher = I.value;
    r.err_fisher = I.error;
    r.fisher_second = J.value;
    r.err_fisher_second = J.error;
    r.entropy_power = entropy_power_of(H.value, g.dim);
    r.err_entropy_power = r.entropy_power * (2.0 / g.dim) * H.error;
    return r;
}

FisherMatrix matrix_1d(const GridDensity& g, const Integrands& in) {
    FisherMatrix m;
    m.dim = 1;
    ValueErr a = budgeted_integral(g, in.I, in.noiseI, in.evalIJ, in.okIJ, in.covered,
                                   in.marginI);
    m.a11 = a.value;
    m.err = a.error;
    return m;
}

FisherMatrix matrix_2d(const GridDensity& g, const Integrands& in) {
    ValueErr a11 = budgeted_integral(g, in.Wxx, in.noiseXX, in.evalIJ, in.okIJ,
                                     in.covered, in.marginI);
    ValueErr a22 = budgeted_integral(g, in.Wyy, in.noiseYY, in.evalIJ, in.okIJ,
                                     in.covered, in.marginI);
    ValueErr a12 = budgeted_integral(g, in.A12, in.noiseA12, in.evalIJ, in.okIJ,
                                     in.covered, in.marginA12);
    FisherMatrix m;
    m.dim = 2;
    m.a11 = a11.value;
    m.a22 = a22.value;
    m.a12 = a12.value;
    m.err = a11.error + a22.error + a12.error;
    return m;
}

} // namespace

double entropy_power_of(double entropy, int dim) {
    return std::exp(2.0 * entropy / double(dim));
}

bool family_fisher_finite(const Factor& f) {
    switch (f.family) {
        case Family::gamma:
        case Family::weibull:
            return f.p1 == 1.0 || f.p1 > 2.0;
        default:
            return true;
    }
}

bool family_fisher_second_finite(const Factor& f) {
    switch (f.family) {
        case Family::gamma:
        case Family::weibull:
            return f.p1 == 1.0 || f.p1 > 4.0;
        default:
            return true;
    }
}

FunctionalReport functionals_analytic(const AnalyticDensity& d, GridSpec spec) {
    GridDensity g = discretize(d, spec);
    Integrands in = build_analytic_integrands(d, g);
    FunctionalReport r = assemble_report(g, in);
    for (int a = 0; a < d.dim; ++a) {
        r.fisher_is_finite = r.fisher_is_finite && family_fisher_finite(d.factor[a]);
        r.fisher_second_is_finite =
            r.fisher_second_is_finite && family_fisher_second_finite(d.factor[a]);
    }
    return r;
}

FunctionalReport functionals_grid(const GridDensity& g) {
    LogField F = make_log_field(g);
    Integrands in = build_grid_integrands(g, F);
    return assemble_report(g, in);
}

FisherMatrix fisher_matrix(const GridDensity& g) {
    LogField F = make_log_field(g);
    Integrands in = build_grid_integrands(g, F);
    return g.dim == 1 ? matrix_1d(g, in) : matrix_2d(g, in);
}

FisherMatrix fisher_matrix(const AnalyticDensity& d, const GridDensity& g) {
    Integrands in = build_analytic_integrands(d, g);
    return g.dim == 1 ? matrix_1d(g, in) : matrix_2d(g, in);
}

ValueErr cross_fisher(const FisherMatrix& a, const FisherMatrix& b) {
    if (a.dim != b.dim) throw contract_error("cross_fisher: dimension mismatch");
    const double sa = std::fabs(a.a11) + std::fabs(a.a22) + 2.0 * std::fabs(a.a12);
    const double sb = std::fabs(b.a11) + std::fabs(b.a22) + 2.0 * std::fabs(b.a12);
    const double value = a.a11 * b.a11 + a.a22 * b.a22 + 2.0 * a.a12 * b.a12;
    return {value, a.err * sb + b.err * sa};
}

} // namespace logconc
