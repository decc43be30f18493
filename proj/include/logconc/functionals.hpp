#pragma once

#include "logconc/densities.hpp"
#include "logconc/grid.hpp"

// Information functionals of a density f with score L = log f:
//   entropy        H = -int f L
//   fisher         I = int |grad L|^2 f          (trace of the Fisher matrix)
//   fisher_second  J = sum_ij int (d_ij L)^2 f
//   entropy_power  N = exp(2 H / dim)
// Two evaluation paths share one quadrature grid: the analytic path uses the
// closed-form potential derivatives, the grid path uses 4th-order stencils on
// sampled log f.  Every value carries a defensible error bound (Richardson
// h-refinement, tail truncation, stencil masking margin, fd roundoff).

namespace logconc {

/// A_ij = int (d_i f)(d_j f) / f.  In 1D the single entry equals I.
struct FisherMatrix {
    int dim = 1;
    double a11 = 0.0;
    double a22 = 0.0;
    double a12 = 0.0;
    double err = 0.0;

    double trace() const { return dim == 1 ? a11 : a11 + a22; }
};

struct FunctionalReport {
    int dim = 1;
    double entropy = 0.0;
    double fisher = 0.0;
    double fisher_second = 0.0;
    double entropy_power = 0.0;
    double err_entropy = 0.0;
    double err_fisher = 0.0;
    double err_fisher_second = 0.0;
    double err_entropy_power = 0.0;
    // Family-level divergence flags (analytic path); a false flag means the
    // exact functional is +inf and the reported number is grid-limited.
    bool fisher_is_finite = true;
    bool fisher_second_is_finite = true;
    std::size_t points = 0;
    double spacing = 0.0;
};

/// Evaluate via the closed-form potential on a fresh quadrature grid.
FunctionalReport functionals_analytic(const AnalyticDensity& d, GridSpec spec = {});

/// Evaluate from density samples alone (log-density stencils).
FunctionalReport functionals_grid(const GridDensity& g);

/// Fisher matrix from samples / from the potential on a given grid.
FisherMatrix fisher_matrix(const GridDensity& g);
FisherMatrix fisher_matrix(const AnalyticDensity& d, const GridDensity& g);

/// Cross term sum_ij A_ij(f) A_ij(g); in 1D simply I(f) I(g).
ValueErr cross_fisher(const FisherMatrix& a, const FisherMatrix& b);

/// N = exp(2 H / dim).
double entropy_power_of(double entropy, int dim);

/// True when the exact functional is finite for this factor's family.
bool family_fisher_finite(const Factor& f);
bool family_fisher_second_finite(const Factor& f);

} // namespace logconc
