#pragma once

#include "logconc/grid.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>

// Log-concave density families with closed-form convex potentials
// f = exp(-phi).  Multivariate densities are products of 1D factors,
// so gradients are per-axis and Hessians diagonal.

namespace logconc {

enum class Family { gaussian, gamma, weibull, gumbel, logistic };

Family family_from_string(const std::string& name);
const char* family_name(Family f);

/// One 1D factor of an analytic density.
struct Factor {
    Family family = Family::gaussian;
    double p1 = 1.0; // gaussian: variance | gamma/weibull: shape | gumbel/logistic: scale
    double p2 = 0.0; // gamma: rate | weibull: scale | gumbel/logistic: location

    double phi(double x) const;    // convex potential, +inf outside the support
    double dphi(double x) const;   // phi'
    double d2phi(double x) const;  // phi'' (>= 0 on the support)
    double density(double x) const { return std::exp(-phi(x)); }

    double mean() const;
    double variance() const;
    double stddev() const;
    double support_lo() const;     // 0 for gamma/weibull, -inf otherwise
    double quantile(double p) const;        // lower-tail quantile
    double quantile_upper(double q) const;  // x with upper tail mass q
    double tail_below(double x) const;
    double tail_above(double x) const;
    std::string describe() const;
};

/// Product density in 1 or 2 dimensions with analytic potential.
class AnalyticDensity {
public:
    int dim = 1;
    std::array<Factor, 2> factor{};

    double phi(double x, double y = 0.0) const {
        return dim == 1 ? factor[0].phi(x) : factor[0].phi(x) + factor[1].phi(y);
    }
    double density(double x, double y = 0.0) const { return std::exp(-phi(x, y)); }
    std::string describe() const;
};

/// Isotropic Gaussian with covariance sigma * I.
AnalyticDensity make_gaussian(double sigma, int dim = 1);

/// Family density from named parameters; dim = 2 repeats the factor per axis.
/// Recognized keys: sigma | shape, rate | shape, scale | scale, location.
AnalyticDensity make_family(Family fam, const std::map<std::string, double>& params,
                            int dim = 1);

/// Product of two 1D analytic densities.
AnalyticDensity make_product(const AnalyticDensity& a, const AnalyticDensity& b);

/// f_alpha(x) = alpha^n f(alpha x); every supported family is closed under
/// dilation, so parameters are rewritten.
AnalyticDensity dilate(const AnalyticDensity& d, double alpha);

/// Exact grid dilation: coordinates scale by 1/alpha, values by alpha^n.
GridDensity dilate(const GridDensity& g, double alpha);

struct GridSpec {
    double spacing = 0.0;        // 0 = default (stddev/50 in 1D, stddev/16 in 2D)
    double half_width_std = 8.0; // minimum coverage in standard deviations
    double quantile = 1e-12;     // per-tail coverage target
};

/// Sample onto a uniform grid covering both the std-dev window and the
/// quantile window, clamp at the support edge, and normalize to unit
/// Simpson mass.  Throws resolution_error for spacing > stddev/10 or a
/// truncation deficit above tolerance.
GridDensity discretize(const AnalyticDensity& d, GridSpec spec = {});

struct LogConcavityReport {
    bool is_log_concave = true;
    double worst_violation = 0.0; // max of f(x-h)f(x+h)/f(x)^2 - 1 over tested points
};

/// Midpoint test along axes (and both diagonals in 2D) at points above the
/// positivity floor.
LogConcavityReport check_log_concavity(const GridDensity& g,
                                       double tol = kLogConcavityTol);

/// Normalized grid density from raw samples (e.g. mixtures for negative tests).
GridDensity grid_from_samples(const GridAxis& axis, std::vector<double> values);

/// Equal-weight two-Gaussian mixture, a deliberately non-log-concave input.
GridDensity make_two_bump(double separation, double sigma, double spacing);

} // namespace logconc
