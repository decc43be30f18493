#include "logconc/densities.hpp"

#include "logconc/errors.hpp"

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/weibull.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace logconc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286;

double softplus(double t) {
    // log(1 + e^t) without overflow.
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

std::string format_params(const Factor& f) {
    char buf[96];
    switch (f.family) {
        case Family::gaussian:
            std::snprintf(buf, sizeof buf, "gaussian(sigma=%g)", f.p1);
            break;
        case Family::gamma:
            std::snprintf(buf, sizeof buf, "gamma(shape=%g,rate=%g)", f.p1, f.p2);
            break;
        case Family::weibull:
            std::snprintf(buf, sizeof buf, "weibull(shape=%g,scale=%g)", f.p1, f.p2);
            break;
        case Family::gumbel:
            std::snprintf(buf, sizeof buf, "gumbel(scale=%g,location=%g)", f.p1, f.p2);
            break;
        case Family::logistic:
            std::snprintf(buf, sizeof buf, "logistic(scale=%g,location=%g)", f.p1, f.p2);
            break;
    }
    return buf;
}

} // namespace

Family family_from_string(const std::string& name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "gamma") return Family::gamma;
    if (name == "weibull") return Family::weibull;
    if (name == "gumbel") return Family::gumbel;
    if (name == "logistic") return Family::logistic;
    throw domain_error("unknown density family: " + name +
                       " (supported: gaussian, gamma, weibull, gumbel, logistic)");
}

const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::gamma: return "gamma";
        case Family::weibull: return "weibull";
        case Family::gumbel: return "gumbel";
        case Family::logistic: return "logistic";
    }
    return "unknown";
}

double Factor::phi(double x) const {
    switch (family) {
        case Family::gaussian:
            return x * x / (2.0 * p1) + 0.5 * std::log(2.0 * M_PI * p1);
        case Family::gamma: {
            if (x < 0.0) return kInf;
            const double k = p1, r = p2;
            const double logterm = (k == 1.0) ? 0.0 : -(k - 1.0) * std::log(x);
            return r * x + logterm + std::lgamma(k) - k * std::log(r);
        }
        case Family::weibull: {
            if (x < 0.0) return kInf;
            const double k = p1, lam = p2, z = x / lam;
            const double logterm = (k == 1.0) ? 0.0 : -(k - 1.0) * std::log(z);
            return std::pow(z, k) + logterm - std::log(k / lam);
        }
        case Family::gumbel: {
            const double z = (x - p2) / p1;
            return z + std::exp(-z) + std::log(p1);
        }
        case Family::logistic: {
            const double z = (x - p2) / p1;
            return z + 2.0 * softplus(-z) + std::log(p1);
        }
    }
    return kInf;
}

double Factor::dphi(double x) const {
    switch (family) {
        case Family::gaussian:
            return x / p1;
        case Family::gamma: {
            const double k = p1, r = p2;
            return (k == 1.0) ? r : r - (k - 1.0) / x;
        }
        case Family::weibull: {
            const double k = p1, lam = p2;
            const double t = (k / lam) * std::pow(x / lam, k - 1.0);
            return (k == 1.0) ? t : t - (k - 1.0) / x;
        }
        case Family::gumbel:
            return (1.0 - std::exp(-(x - p2) / p1)) / p1;
        case Family::logistic:
            return std::tanh((x - p2) / (2.0 * p1)) / p1;
    }
    return 0.0;
}

double Factor::d2phi(double x) const {
    switch (family) {
        case Family::gaussian:
            return 1.0 / p1;
        case Family::gamma: {
            const double k = p1;
            return (k == 1.0) ? 0.0 : (k - 1.0) / (x * x);
        }
        case Family::weibull: {
            const double k = p1, lam = p2;
            const double t = (k * (k - 1.0) / (lam * lam)) * std::pow(x / lam, k - 2.0);
            return (k == 1.0) ? 0.0 : t + (k - 1.0) / (x * x);
        }
        case Family::gumbel:
            return std::exp(-(x - p2) / p1) / (p1 * p1);
        case Family::logistic: {
            // 2 e^{-z} / (s (1+e^{-z}))^2, written as a bounded sech form
            const double c = std::cosh((x - p2) / (2.0 * p1));
            return 1.0 / (2.0 * p1 * p1 * c * c);
        }
    }
    return 0.0;
}

double Factor::mean() const {
    switch (family) {
        case Family::gaussian: return 0.0;
        case Family::gamma: return p1 / p2;
        case Family::weibull: return p2 * std::tgamma(1.0 + 1.0 / p1);
        case Family::gumbel: return p2 + p1 * kEulerGamma;
        case Family::logistic: return p2;
    }
    return 0.0;
}

double Factor::variance() const {
    switch (family) {
        case Family::gaussian: return p1;
        case Family::gamma: return p1 / (p2 * p2);
        case Family::weibull: {
            const double g1 = std::tgamma(1.0 + 1.0 / p1);
            const double g2 = std::tgamma(1.0 + 2.0 / p1);
            return p2 * p2 * (g2 - g1 * g1);
        }
        case Family::gumbel: return p1 * p1 * M_PI * M_PI / 6.0;
        case Family::logistic: return p1 * p1 * M_PI * M_PI / 3.0;
    }
    return 0.0;
}

double Factor::stddev() const { return std::sqrt(variance()); }

double Factor::support_lo() const {
    return (family == Family::gamma || family == Family::weibull) ? 0.0 : -kInf;
}

double Factor::quantile(double p) const {
    switch (family) {
        case Family::gaussian:
            return boost::math::quantile(boost::math::normal(0.0, std::sqrt(p1)), p);
        case Family::gamma:
            return boost::math::quantile(boost::math::gamma_distribution<double>(p1, 1.0 / p2), p);
        case Family::weibull:
            return boost::math::quantile(boost::math::weibull_distribution<double>(p1, p2), p);
        case Family::gumbel:
            return p2 - p1 * std::log(-std::log(p));
        case Family::logistic:
            return p2 + p1 * std::log(p / (1.0 - p));
    }
    return 0.0;
}

double Factor::quantile_upper(double q) const {
    switch (family) {
        case Family::gaussian:
            return boost::math::quantile(
                boost::math::complement(boost::math::normal(0.0, std::sqrt(p1)), q));
        case Family::gamma:
            return boost::math::quantile(boost::math::complement(
                boost::math::gamma_distribution<double>(p1, 1.0 / p2), q));
        case Family::weibull:
            return boost::math::quantile(boost::math::complement(
                boost::math::weibull_distribution<double>(p1, p2), q));
        case Family::gumbel:
            return p2 - p1 * std::log(-std::log1p(-q));
        case Family::logistic:
            return p2 - p1 * std::log(q / (1.0 - q));
    }
    return 0.0;
}

double Factor::tail_below(double x) const {
    if (x <= support_lo()) return 0.0;
    switch (family) {
        case Family::gaussian:
            return boost::math::cdf(boost::math::normal(0.0, std::sqrt(p1)), x);
        case Family::gamma:
            return boost::math::cdf(boost::math::gamma_distribution<double>(p1, 1.0 / p2), x);
        case Family::weibull:
            return -std::expm1(-std::pow(x / p2, p1));
        case Family::gumbel:
            return std::exp(-std::exp(-(x - p2) / p1));
        case Family::logistic:
            return 1.0 / (1.0 + std::exp(-(x - p2) / p1));
    }
    return 0.0;
}

double Factor::tail_above(double x) const {
    switch (family) {
        case Family::gaussian:
            return boost::math::cdf(
                boost::math::complement(boost::math::normal(0.0, std::sqrt(p1)), x));
        case Family::gamma:
            return boost::math::cdf(boost::math::complement(
                boost::math::gamma_distribution<double>(p1, 1.0 / p2), x));
        case Family::weibull:
            return std::exp(-std::pow(x / p2, p1));
        case Family::gumbel:
            return -std::expm1(-std::exp(-(x - p2) / p1));
        case Family::logistic:
            return 1.0 / (1.0 + std::exp((x - p2) / p1));
    }
    return 0.0;
}

std::string Factor::describe() const { return format_params(*this); }

std::string AnalyticDensity::describe() const {
    if (dim == 1) return factor[0].describe();
    return factor[0].describe() + " x " + factor[1].describe();
}

namespace {

void validate_factor(const Factor& f) {
    switch (f.family) {
        case Family::gaussian:
            if (!(f.p1 > 0.0)) throw domain_error("gaussian sigma must be positive");
            break;
        case Family::gamma:
            if (!(f.p1 >= 1.0))
                throw domain_error("gamma shape below 1 is not log-concave");
            if (!(f.p2 > 0.0)) throw domain_error("gamma rate must be positive");
            break;
        case Family::weibull:
            if (!(f.p1 >= 1.0))
                throw domain_error("weibull shape below 1 is not log-concave");
            if (!(f.p2 > 0.0)) throw domain_error("weibull scale must be positive");
            break;
        case Family::gumbel:
        case Family::logistic:
            if (!(f.p1 > 0.0)) throw domain_error("scale must be positive");
            break;
    }
    if (!std::isfinite(f.p1) || !std::isfinite(f.p2))
        throw domain_error("density parameters must be finite");
}

void validate_dim(int dim) {
    if (dim != 1 && dim != 2)
        throw domain_error("supported dimensions are 1 and 2");
}

double param(const std::map<std::string, double>& m, const char* key, double dflt,
             bool required = false) {
    auto it = m.find(key);
    if (it == m.end()) {
        if (required) throw domain_error(std::string("missing parameter: ") + key);
        return dflt;
    }
    return it->second;
}

} // namespace

AnalyticDensity make_gaussian(double sigma, int dim) {
    validate_dim(dim);
    Factor f{Family::gaussian, sigma, 0.0};
    validate_factor(f);
    AnalyticDensity d;
    d.dim = dim;
    d.factor = {f, f};
    return d;
}

AnalyticDensity make_family(Family fam, const std::map<std::string, double>& params,
                            int dim) {
    validate_dim(dim);
    static const std::map<Family, std::vector<std::string>> allowed = {
        {Family::gaussian, {"sigma"}},
        {Family::gamma, {"shape", "rate"}},
        {Family::weibull, {"shape", "scale"}},
        {Family::gumbel, {"scale", "location"}},
        {Family::logistic, {"scale", "location"}},
    };
    for (const auto& [key, value] : params) {
        (void)value;
        const auto& ok = allowed.at(fam);
        if (std::find(ok.begin(), ok.end(), key) == ok.end())
            throw domain_error("unknown parameter '" + key + "' for family " +
                               family_name(fam));
    }
    Factor f;
    f.family = fam;
    switch (fam) {
        case Family::gaussian:
            f.p1 = param(params, "sigma", 1.0, true);
            break;
        case Family::gamma:
            f.p1 = param(params, "shape", 0.0, true);
            f.p2 = param(params, "rate", 1.0);
            break;
        case Family::weibull:
            f.p1 = param(params, "shape", 0.0, true);
            f.p2 = param(params, "scale", 1.0);
            break;
        case Family::gumbel:
        case Family::logistic:
            f.p1 = param(params, "scale", 1.0);
            f.p2 = param(params, "location", 0.0);
            break;
    }
    validate_factor(f);
    AnalyticDensity d;
    d.dim = dim;
    d.factor = {f, f};
    return d;
}

AnalyticDensity make_product(const AnalyticDensity& a, const AnalyticDensity& b) {
    if (a.dim != 1 || b.dim != 1)
        throw contract_error("product factors must be one-dimensional");
    AnalyticDensity d;
    d.dim = 2;
    d.factor = {a.factor[0], b.factor[0]};
    return d;
}

AnalyticDensity dilate(const AnalyticDensity& d, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw domain_error("dilation factor must be positive and finite");
    AnalyticDensity out = d;
    for (int a = 0; a < d.dim; ++a) {
        Factor& f = out.factor[a];
        switch (f.family) {
            case Family::gaussian: f.p1 /= alpha * alpha; break;
            case Family::gamma: f.p2 *= alpha; break;
            case Family::weibull: f.p2 /= alpha; break;
            case Family::gumbel:
            case Family::logistic:
                f.p1 /= alpha;
                f.p2 /= alpha;
                break;
        }
    }
    return out;
}

GridDensity dilate(const GridDensity& g, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw domain_error("dilation factor must be positive and finite");
    GridDensity out = g;
    const double scale = (g.dim == 2) ? alpha * alpha : alpha;
    for (int a = 0; a < g.dim; ++a) {
        out.ax[a].origin /= alpha;
        out.ax[a].spacing /= alpha;
    }
    for (double& x : out.v) x *= scale;
    return out;
}

namespace {

struct AxisBuild {
    GridAxis axis;
    double deficit;
};

AxisBuild build_axis(const Factor& f, const GridSpec& spec, int dim) {
    const double sd = f.stddev();
    const double h = spec.spacing > 0.0 ? spec.spacing : sd / (dim == 1 ? 50.0 : 16.0);
    if (h > sd / 10.0)
        throw resolution_error("grid spacing " + std::to_string(h) +
                               " too coarse for stddev " + std::to_string(sd));
    const double mu = f.mean();
    double lo = std::min(mu - spec.half_width_std * sd, f.quantile(spec.quantile));
    double hi = std::max(mu + spec.half_width_std * sd, f.quantile_upper(spec.quantile));
    lo = std::max(lo, f.support_lo());
    const std::size_t count =
        align_count(static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1);
    GridAxis axis{lo, h, count};
    const double deficit = f.tail_below(axis.origin) + f.tail_above(axis.upper());
    return {axis, deficit};
}

} // namespace

GridDensity discretize(const AnalyticDensity& d, GridSpec spec) {
    if (spec.half_width_std < 8.0)
        throw contract_error("half_width_std must be at least 8");
    if (!(spec.quantile > 0.0 && spec.quantile < 0.5))
        throw contract_error("quantile target must lie in (0, 0.5)");
    GridDensity g;
    g.dim = d.dim;
    double deficit = 0.0;
    for (int a = 0; a < d.dim; ++a) {
        AxisBuild b = build_axis(d.factor[a], spec, d.dim);
        g.ax[a] = b.axis;
        deficit += b.deficit;
    }
    if (deficit > kTruncTol)
        throw resolution_error("grid truncation deficit " + std::to_string(deficit) +
                               " exceeds tolerance");
    if (d.dim == 1) {
        g.v.resize(g.ax[0].count);
        for (std::size_t i = 0; i < g.ax[0].count; ++i)
            g.v[i] = d.factor[0].density(g.ax[0].x(i));
    } else {
        std::vector<double> vx(g.ax[0].count);
        std::vector<double> vy(g.ax[1].count);
        for (std::size_t i = 0; i < g.ax[0].count; ++i)
            vx[i] = d.factor[0].density(g.ax[0].x(i));
        for (std::size_t j = 0; j < g.ax[1].count; ++j)
            vy[j] = d.factor[1].density(g.ax[1].x(j));
        g.v.resize(vx.size() * vy.size());
        for (std::size_t i = 0; i < vx.size(); ++i)
            for (std::size_t j = 0; j < vy.size(); ++j) g.v[i * vy.size() + j] = vx[i] * vy[j];
    }
    g.truncation_deficit = deficit;
    g.normalize();
    return g;
}

LogConcavityReport check_log_concavity(const GridDensity& g, double tol) {
    const double floor = kFloorRel * g.max_value();
    double worst = -std::numeric_limits<double>::infinity();
    const std::size_t nx = g.ax[0].count;
    const std::size_t nyc = g.ny();

    struct Dir {
        std::ptrdiff_t dx, dy;
    };
    std::vector<Dir> dirs;
    if (g.dim == 1)
        dirs = {{1, 0}};
    else
        dirs = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};

    for (const Dir& d : dirs) {
        for (std::size_t ix = (d.dx > 0 ? 1 : 0); ix + (d.dx > 0 ? 1 : 0) < nx; ++ix) {
            const std::size_t jlo = (d.dy != 0) ? 1 : 0;
            const std::size_t jhi = (d.dy != 0) ? nyc - 1 : nyc;
            for (std::size_t iy = jlo; iy < jhi; ++iy) {
                const double b = g.at(ix, iy);
                if (b < floor) continue;
                const double a = g.at(ix - d.dx, iy - d.dy);
                const double c = g.at(ix + d.dx, iy + d.dy);
                if (a < floor || c < floor) continue;
                const double viol = (a * c) / (b * b) - 1.0;
                worst = std::max(worst, viol);
            }
        }
    }
    if (!std::isfinite(worst)) worst = 0.0;
    return {worst <= tol, worst};
}

GridDensity grid_from_samples(const GridAxis& axis, std::vector<double> values) {
    if (values.size() != axis.count)
        throw contract_error("sample count does not match axis");
    if (axis.count % 4 != 1 || axis.count < 5)
        throw contract_error("grid point count must be 1 mod 4 and at least 5");
    for (double x : values)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw contract_error("density samples must be finite and nonnegative");
    GridDensity g;
    g.dim = 1;
    g.ax[0] = axis;
    g.v = std::move(values);
    g.normalize();
    return g;
}

GridDensity make_two_bump(double separation, double sigma, double spacing) {
    if (!(separation > 0.0) || !(sigma > 0.0) || !(spacing > 0.0))
        throw domain_error("two-bump parameters must be positive");
    const double half = separation / 2.0;
    const double extent = half + 8.0 * std::sqrt(sigma);
    const std::size_t count = align_count(
        static_cast<std::size_t>(std::ceil(2.0 * extent / spacing)) + 1);
    GridAxis axis{-extent, spacing, count};
    std::vector<double> vals(count);
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * sigma);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = axis.x(i);
        const double l = x - half, r = x + half;
        vals[i] = 0.5 * norm *
                  (std::exp(-l * l / (2.0 * sigma)) + std::exp(-r * r / (2.0 * sigma)));
    }
    return grid_from_samples(axis, std::move(vals));
}

} // namespace logconc
