#include "logconc/grid.hpp"

#include "logconc/errors.hpp"
#include "logconc/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace logconc {

namespace {

// Simpson coefficient pattern 1,4,2,...,2,4,1 scaled by h/3.
void check_simpson_count(std::size_t count) {
    if (count < 5 || count % 2 == 0)
        throw contract_error("Simpson quadrature needs an odd point count >= 5");
}

double row_integral(const std::vector<double>& w, const double* row) {
    return kernels::dot(w.data(), row, w.size());
}

} // namespace

std::size_t align_count(std::size_t count) {
    if (count < 5) count = 5;
    const std::size_t r = (count - 1) % 4;
    return r == 0 ? count : count + (4 - r);
}

std::vector<double> simpson_weights(const GridAxis& axis) {
    check_simpson_count(axis.count);
    std::vector<double> w(axis.count);
    const double s = axis.spacing / 3.0;
    w.front() = s;
    w.back() = s;
    for (std::size_t i = 1; i + 1 < axis.count; ++i) w[i] = (i % 2 ? 4.0 : 2.0) * s;
    return w;
}

double GridDensity::max_value() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

double GridDensity::mass() const { return integrate(*this, v); }

void GridDensity::normalize() {
    const double m = mass();
    if (!(m > 0.0)) throw contract_error("density has nonpositive mass");
    const double s = 1.0 / m;
    for (double& x : v) x *= s;
}

double GridDensity::mean(int axis) const {
    std::vector<double> integrand(v.size());
    const std::size_t nyc = ny();
    for (std::size_t ix = 0; ix < ax[0].count; ++ix)
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            const double c = axis == 0 ? ax[0].x(ix) : ax[1].x(iy);
            integrand[ix * nyc + iy] = c * v[ix * nyc + iy];
        }
    return integrate(*this, integrand) / mass();
}

double GridDensity::variance(int axis) const {
    const double mu = mean(axis);
    std::vector<double> integrand(v.size());
    const std::size_t nyc = ny();
    for (std::size_t ix = 0; ix < ax[0].count; ++ix)
        for (std::size_t iy = 0; iy < nyc; ++iy) {
            const double c = (axis == 0 ? ax[0].x(ix) : ax[1].x(iy)) - mu;
            integrand[ix * nyc + iy] = c * c * v[ix * nyc + iy];
        }
    return integrate(*this, integrand) / mass();
}

void GridDensity::recentre() {
    for (int a = 0; a < dim; ++a) ax[a].origin -= mean(a);
}

GridDensity GridDensity::subsampled() const {
    GridDensity s;
    s.dim = dim;
    s.truncation_deficit = truncation_deficit;
    for (int a = 0; a < dim; ++a) {
        s.ax[a].origin = ax[a].origin;
        s.ax[a].spacing = 2.0 * ax[a].spacing;
        s.ax[a].count = (ax[a].count + 1) / 2;
    }
    const std::size_t nyc = ny();
    const std::size_t sny = s.ny();
    s.v.resize(s.ax[0].count * sny);
    for (std::size_t ix = 0; ix < s.ax[0].count; ++ix)
        for (std::size_t iy = 0; iy < sny; ++iy)
            s.v[ix * sny + iy] = v[(2 * ix) * nyc + (dim == 2 ? 2 * iy : 0)];
    return s;
}

double integrate(const GridDensity& g, const std::vector<double>& integrand) {
    if (integrand.size() != g.size())
        throw contract_error("integrand size does not match grid");
    const std::vector<double> wx = simpson_weights(g.ax[0]);
    if (g.dim == 1) return row_integral(wx, integrand.data());
    const std::vector<double> wy = simpson_weights(g.ax[1]);
    std::vector<double> rows(g.ax[0].count);
    for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
        rows[ix] = row_integral(wy, integrand.data() + ix * g.ax[1].count);
    return kernels::dot(wx.data(), rows.data(), rows.size());
}

double integrate_subsampled(const GridDensity& g, const std::vector<double>& integrand) {
    if (integrand.size() != g.size())
        throw contract_error("integrand size does not match grid");
    GridAxis sx{g.ax[0].origin, 2.0 * g.ax[0].spacing, (g.ax[0].count + 1) / 2};
    const std::vector<double> wx = simpson_weights(sx);
    if (g.dim == 1) {
        std::vector<double> sub(sx.count);
        for (std::size_t i = 0; i < sx.count; ++i) sub[i] = integrand[2 * i];
        return row_integral(wx, sub.data());
    }
    GridAxis sy{g.ax[1].origin, 2.0 * g.ax[1].spacing, (g.ax[1].count + 1) / 2};
    const std::vector<double> wy = simpson_weights(sy);
    std::vector<double> sub(sy.count);
    std::vector<double> rows(sx.count);
    for (std::size_t ix = 0; ix < sx.count; ++ix) {
        const double* row = integrand.data() + (2 * ix) * g.ax[1].count;
        for (std::size_t iy = 0; iy < sy.count; ++iy) sub[iy] = row[2 * iy];
        rows[ix] = row_integral(wy, sub.data());
    }
    return kernels::dot(wx.data(), rows.data(), rows.size());
}

ValueErr integrate_with_error(const GridDensity& g, const std::vector<double>& integrand) {
    const double sh = integrate(g, integrand);
    const double s2h = integrate_subsampled(g, integrand);
    // |S_h - S_2h| / (2^p - 1) bounds the error of S_h at convergence order p.
    // Simpson is nominally p = 4, but integrands with endpoint singularities
    // (gamma-like potentials at a support edge) degrade to p ~ 2, so divide
    // by 2: a valid bound for every order above ~1.6.
    return {sh, std::abs(sh - s2h) / 2.0};
}

double integrate_trapezoid(const GridDensity& g, const std::vector<double>& integrand) {
    if (integrand.size() != g.size())
        throw contract_error("integrand size does not match grid");
    auto axis_weights = [](const GridAxis& a) {
        std::vector<double> w(a.count, a.spacing);
        w.front() = 0.5 * a.spacing;
        w.back() = 0.5 * a.spacing;
        return w;
    };
    const std::vector<double> wx = axis_weights(g.ax[0]);
    if (g.dim == 1) return row_integral(wx, integrand.data());
    const std::vector<double> wy = axis_weights(g.ax[1]);
    std::vector<double> rows(g.ax[0].count);
    for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
        rows[ix] = row_integral(wy, integrand.data() + ix * g.ax[1].count);
    return kernels::dot(wx.data(), rows.data(), rows.size());
}

} // namespace logconc
