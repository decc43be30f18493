#include "logconc/epiflow.hpp"

#include "logconc/errors.hpp"
#include "logconc/heatflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace logconc {

namespace {

double default_pair_spacing(const AnalyticDensity& f, const AnalyticDensity& g)
{
    const double div = f.dim == 1 ? 50.0 : 16.0;
    double h = std::numeric_limits<double>::infinity();
    for (const AnalyticDensity* d : {&f, &g})
        for (int a = 0; a < d->dim; ++a)
            h = std::min(h, d->factor[std::size_t(a)].stddev() / div);
    return h;
}

struct FlowBases {
    int dim = 1;
    GridDensity f0, g0, c0;
};

/// Shared-spacing zero-mean discretizations of f, g, and f*g.  The spacing
/// refines so the slower flow's kernel at the first positive mesh time spans
/// at least 2.5 cells; at that width kernel aliasing is below 1e-13 and the
/// time wobble it would inject into second differences stays negligible.
FlowBases make_bases(const AnalyticDensity& f, const AnalyticDensity& g, double kappa,
                     double first_positive, GridSpec spec, const char* op)
{
    if (f.dim != g.dim)
        throw contract_error(std::string(op) + ": dimension mismatch");
    double h = spec.spacing > 0.0 ? spec.spacing : default_pair_spacing(f, g);
    if (first_positive > 0.0) {
        const double kmin = std::min(kappa, 1.0 - kappa);
        h = std::min(h, std::sqrt(2.0 * kmin * first_positive) / 2.5);
    }
    GridSpec s = spec;
    s.spacing = h;

    FlowBases b;
    b.dim = f.dim;
    b.f0 = discretize(f, s);
    b.g0 = discretize(g, s);
    if (!check_log_concavity(b.f0).is_log_concave || !check_log_concavity(b.g0).is_log_concave)
        throw precondition_error(std::string(op) + ": inputs must be log-concave");
    // Lambda is translation invariant; zero-mean bases keep the late-time
    // grids centred as everything gaussianizes.
    b.f0.recentre();
    b.g0.recentre();
    b.c0 = convolve(b.f0, b.g0);
    return b;
}

struct FlowPoint {
    FunctionalReport rf, rg, rc;
    double P = 0.0;
    double P_err = 0.0;
};

/// Functionals of f(t), g(t) and the deficit P(f(t), g(t)); the convolution
/// flow is evaluated only when asked for, it dominates the cost.
FlowPoint eval_point(const FlowBases& b, double kappa, double t, bool with_conv)
{
    const GridDensity uf = t > 0.0 ? heat_step(b.f0, kappa, t) : b.f0;
    const GridDensity ug = t > 0.0 ? heat_step(b.g0, 1.0 - kappa, t) : b.g0;

    FlowPoint pt;
    pt.rf = functionals_grid(uf);
    pt.rg = functionals_grid(ug);
    if (with_conv) {
        const GridDensity uc = t > 0.0 ? heat_step(b.c0, 1.0, t) : b.c0;
        pt.rc = functionals_grid(uc);
    }

    const ValueErr cross = cross_fisher(fisher_matrix(uf), fisher_matrix(ug));
    const double jf = pt.rf.fisher_second;
    const double jg = pt.rg.fisher_second;
    const double root = std::sqrt(std::max(0.0, jf * jg));
    const double root_err =
        root > 0.0 ? (jg * pt.rf.err_fisher_second + jf * pt.rg.err_fisher_second) / (2.0 * root)
                   : pt.rf.err_fisher_second + pt.rg.err_fisher_second;
    pt.P = root - cross.value;
    pt.P_err = root_err + cross.error;
    return pt;
}

void validate_mesh(const std::vector<double>& times, const char* op)
{
    if (times.size() < 2 || times.front() != 0.0)
        throw precondition_error(std::string(op) + ": mesh must start at 0 with two or more points");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw precondition_error(std::string(op) + ": mesh must be strictly increasing");
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y)
{
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

/// Trapezoid on every other node (endpoints kept); the difference against
/// the full rule is a conservative quadrature error bound.
double trapezoid_thinned(const std::vector<double>& x, const std::vector<double>& y)
{
    double s = 0.0;
    std::size_t prev = 0;
    for (std::size_t i = 2; i < x.size(); i += 2) {
        s += 0.5 * (x[i] - x[prev]) * (y[i] + y[prev]);
        prev = i;
    }
    if (prev != x.size() - 1) {
        const std::size_t last = x.size() - 1;
        s += 0.5 * (x[last] - x[prev]) * (y[last] + y[prev]);
    }
    return s;
}

/// Envelope decay exponent of P by a log-log least squares fit over the last
/// decade of RESOLVED samples (P above its own error bar); beyond those the
/// measurements only trace the quadrature noise floor, whose shallow decay
/// says nothing about the deficit.  The fitted power law is evaluated at the
/// horizon.  Returns false when fewer than three resolved samples exist.
bool fit_tail_exponent(const std::vector<double>& s, const std::vector<double>& P,
                       const std::vector<double>& Perr, double horizon, double& phat,
                       double& p_at_horizon)
{
    double s_res = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] > 0.0 && P[i] > Perr[i])
            s_res = s[i];
    if (s_res <= 0.0)
        return false;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < s_res / 10.0 || s[i] > s_res || !(P[i] > Perr[i]))
            continue;
        const double x = std::log(s[i]);
        const double y = std::log(P[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 3)
        return false;
    const double det = m * sxx - sx * sx;
    if (det <= 0.0)
        return false;
    const double slope = (m * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / m;
    phat = -slope;
    p_at_horizon = std::exp(intercept + slope * std::log(horizon));
    return true;
}

} // namespace

std::vector<double> flow_mesh(double horizon, int per_octave)
{
    if (!(horizon > 0.0))
        throw domain_error("flow_mesh: horizon must be positive");
    if (per_octave < 1)
        per_octave = 1;
    std::vector<double> m{0.0};
    const double ratio = std::pow(2.0, 1.0 / per_octave);
    for (double t = 0.01; t < horizon * (1.0 - 1e-9); t *= ratio)
        m.push_back(t);
    m.push_back(horizon);
    return m;
}

double lambda_limit(double kappa, int n)
{
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw domain_error("lambda_limit: kappa must lie in (0,1)");
    return -0.5 * n * (kappa * std::log(kappa) + (1.0 - kappa) * std::log1p(-kappa));
}

double optimal_kappa(const FunctionalReport& f, const FunctionalReport& g)
{
    return f.entropy_power / (f.entropy_power + g.entropy_power);
}

double optimal_kappa(const AnalyticDensity& f, const AnalyticDensity& g, GridSpec spec)
{
    return optimal_kappa(functionals_analytic(f, spec), functionals_analytic(g, spec));
}

ValueErr deficit_P(const PairAnalysis& p)
{
    if (!p.f.fisher_second_is_finite || !p.g.fisher_second_is_finite)
        throw precondition_error("deficit_P: both inputs need finite J");
    const double jf = p.f.fisher_second;
    const double jg = p.g.fisher_second;
    const double root = std::sqrt(std::max(0.0, jf * jg));
    const double root_err =
        root > 0.0 ? (jg * p.f.err_fisher_second + jf * p.g.err_fisher_second) / (2.0 * root)
                   : p.f.err_fisher_second + p.g.err_fisher_second;
    return {root - p.cross.value, root_err + p.cross.error};
}

ValueErr deficit_P(const AnalyticDensity& f, const AnalyticDensity& g, GridSpec spec)
{
    return deficit_P(analyze_pair(f, g, spec));
}

FlowTrace lambda_trace(const AnalyticDensity& f, const AnalyticDensity& g, double kappa,
                       const std::vector<double>& times, GridSpec spec)
{
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw domain_error("lambda_trace: kappa must lie in (0,1)");
    validate_mesh(times, "lambda_trace");

    const FlowBases b = make_bases(f, g, kappa, times[1], spec, "lambda_trace");
    const double q = 1.0 - kappa;
    const double k2 = kappa * kappa, q2 = q * q;
    const double k3 = k2 * kappa, q3 = q2 * q;

    const std::size_t m = times.size();
    FlowTrace tr;
    tr.dim = f.dim;
    tr.kappa = kappa;
    tr.limit = lambda_limit(kappa, f.dim);
    tr.times = times;
    for (auto* v : {&tr.lambda, &tr.lambda_err, &tr.dlambda, &tr.d2lambda, &tr.analytic_d1,
                    &tr.analytic_d2, &tr.d1_err, &tr.d2_err, &tr.P_vals, &tr.P_err, &tr.H_f,
                    &tr.H_g, &tr.H_conv, &tr.I_f, &tr.I_g, &tr.I_conv, &tr.J_f, &tr.J_g,
                    &tr.J_conv})
        v->assign(m, 0.0);

    for (std::size_t i = 0; i < m; ++i) {
        const FlowPoint pt = eval_point(b, kappa, times[i], true);
        tr.H_f[i] = pt.rf.entropy;
        tr.H_g[i] = pt.rg.entropy;
        tr.H_conv[i] = pt.rc.entropy;
        tr.I_f[i] = pt.rf.fisher;
        tr.I_g[i] = pt.rg.fisher;
        tr.I_conv[i] = pt.rc.fisher;
        tr.J_f[i] = pt.rf.fisher_second;
        tr.J_g[i] = pt.rg.fisher_second;
        tr.J_conv[i] = pt.rc.fisher_second;

        tr.lambda[i] = pt.rc.entropy - kappa * pt.rf.entropy - q * pt.rg.entropy;
        tr.lambda_err[i] =
            pt.rc.err_entropy + kappa * pt.rf.err_entropy + q * pt.rg.err_entropy;
        tr.analytic_d1[i] = pt.rc.fisher - k2 * pt.rf.fisher - q2 * pt.rg.fisher;
        tr.d1_err[i] = pt.rc.err_fisher + k2 * pt.rf.err_fisher + q2 * pt.rg.err_fisher;
        tr.analytic_d2[i] = -2.0 * (pt.rc.fisher_second - k3 * pt.rf.fisher_second -
                                    q3 * pt.rg.fisher_second);
        tr.d2_err[i] = 2.0 * (pt.rc.err_fisher_second + k3 * pt.rf.err_fisher_second +
                              q3 * pt.rg.err_fisher_second);
        tr.P_vals[i] = pt.P;
        tr.P_err[i] = pt.P_err;
    }

    // nonuniform three-point stencils; second differences replicate at the ends
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double h1 = times[i] - times[i - 1];
        const double h2 = times[i + 1] - times[i];
        const double den = h1 * h2 * (h1 + h2);
        tr.dlambda[i] = (h1 * h1 * tr.lambda[i + 1] - h2 * h2 * tr.lambda[i - 1] -
                         (h1 * h1 - h2 * h2) * tr.lambda[i]) /
                        den;
        tr.d2lambda[i] = 2.0 *
                         (h2 * tr.lambda[i - 1] - (h1 + h2) * tr.lambda[i] +
                          h1 * tr.lambda[i + 1]) /
                         den;
    }
    tr.dlambda[0] = (tr.lambda[1] - tr.lambda[0]) / (times[1] - times[0]);
    tr.dlambda[m - 1] = (tr.lambda[m - 1] - tr.lambda[m - 2]) / (times[m - 1] - times[m - 2]);
    if (m > 2) {
        tr.d2lambda[0] = tr.d2lambda[1];
        tr.d2lambda[m - 1] = tr.d2lambda[m - 2];
    }
    return tr;
}

StrengthenedEpiReport strengthened_epi(const AnalyticDensity& f, const AnalyticDensity& g,
                                       double horizon, std::vector<double> mesh, GridSpec spec)
{
    if (!(horizon > 0.0))
        throw domain_error("strengthened_epi: horizon must be positive");
    if (mesh.empty())
        mesh = flow_mesh(horizon, 4);
    validate_mesh(mesh, "strengthened_epi");

    // Divergent J at t = 0 is tolerated: the integrand s P(s) carries zero
    // weight at the origin node and the flow has finite J for every s > 0
    // (J(u_s) grows no faster than s^{-1/2} for the supported families), so
    // the integral converges and the early grid-limited samples enter with
    // their own error bars.
    const FunctionalReport af = functionals_analytic(f, spec);
    const FunctionalReport ag = functionals_analytic(g, spec);

    StrengthenedEpiReport rep;
    rep.kappa_bar = optimal_kappa(af, ag);
    const double kb = rep.kappa_bar;
    const double w = kb * kb * (1.0 - kb) * (1.0 - kb);
    const int n = f.dim;

    const FlowBases b = make_bases(f, g, kb, mesh[1], spec, "strengthened_epi");

    const std::size_t m = mesh.size();
    std::vector<double> P(m), Perr(m), sP(m), sPerr(m);
    double lhs = 0.0, lhs_err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const FlowPoint pt = eval_point(b, kb, mesh[i], i == 0);
        P[i] = pt.P;
        Perr[i] = pt.P_err;
        sP[i] = mesh[i] * pt.P;
        sPerr[i] = mesh[i] * pt.P_err;
        if (i == 0) {
            lhs = pt.rc.entropy_power;
            lhs_err = pt.rc.err_entropy_power;
        }
    }

    const double T_full = trapezoid(mesh, sP);
    const double quad_err = std::fabs(T_full - trapezoid_thinned(mesh, sP));
    const double data_err = trapezoid(mesh, sPerr);
    rep.P_kappa = w * T_full;
    rep.P_kappa_err = w * (quad_err + data_err);

    // tail of int s P ds beyond the horizon from the measured envelope
    // P <= A s^-p over the last decade, with safety factor 10; a fit
    // shallower than s^-2.2 (or unusable) cannot certify convergence
    const double H = mesh.back();
    double phat = 0.0, p_end = 0.0;
    const bool fit_ok = fit_tail_exponent(mesh, P, Perr, H, phat, p_end) && phat > 2.2;
    if (fit_ok) {
        rep.tail_estimate = w * 10.0 * p_end * H * H / (phat - 2.0);
    } else {
        // deficit never resolved above noise: bound the tail by the noise
        // envelope at the pessimistic certifiable decay p = 2.2
        double cap = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (mesh[i] >= H / 10.0)
                cap = std::max(cap, std::fabs(P[i]) + Perr[i]);
        rep.tail_estimate = w * 10.0 * cap * H * H / 0.2;
    }
    // converged when the tail is small against the integral or lost in its
    // own quadrature bar
    rep.horizon_ok =
        rep.tail_estimate <= std::max(1e-3 * std::max(rep.P_kappa, 0.0), rep.P_kappa_err);

    rep.R = std::exp(2.0 * rep.P_kappa / n);
    rep.R_err = rep.R * (2.0 / n) * rep.P_kappa_err;

    rep.epi_lhs = lhs;
    rep.epi_rhs_classic = af.entropy_power + ag.entropy_power;
    rep.epi_rhs_strengthened = rep.epi_rhs_classic * rep.R;
    rep.sep_slack = rep.epi_lhs - rep.epi_rhs_strengthened;
    rep.sep_noise = lhs_err + rep.R * (af.err_entropy_power + ag.err_entropy_power) +
                    rep.epi_rhs_classic * rep.R_err +
                    rep.epi_rhs_strengthened * std::expm1(2.0 * rep.tail_estimate / n);
    rep.sep_holds = rep.sep_slack >= -rep.sep_noise;
    return rep;
}

InequalityVerdict verify_str1(const AnalyticDensity& f, const AnalyticDensity& g, double kappa,
                              double t, double horizon, GridSpec spec)
{
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw domain_error("verify_str1: kappa must lie in (0,1)");
    if (t < 0.0 || !(horizon > t))
        throw domain_error("verify_str1: need 0 <= t < horizon");

    std::vector<double> mesh{t};
    const double ratio = std::pow(2.0, 0.25);
    for (double u = t > 0.0 ? t * ratio : 0.01; u < horizon * (1.0 - 1e-9); u *= ratio)
        mesh.push_back(u);
    mesh.push_back(horizon);

    const FlowBases b = make_bases(f, g, kappa, mesh[t > 0.0 ? 0 : 1], spec, "verify_str1");

    const std::size_t m = mesh.size();
    std::vector<double> P(m), Perr(m);
    double If = 0.0, Ig = 0.0, Ic = 0.0, Ierr = 0.0;
    const double k2 = kappa * kappa, q2 = (1.0 - kappa) * (1.0 - kappa);
    for (std::size_t i = 0; i < m; ++i) {
        const FlowPoint pt = eval_point(b, kappa, mesh[i], i == 0);
        P[i] = pt.P;
        Perr[i] = pt.P_err;
        if (i == 0) {
            If = pt.rf.fisher;
            Ig = pt.rg.fisher;
            Ic = pt.rc.fisher;
            Ierr = pt.rc.err_fisher + k2 * pt.rf.err_fisher + q2 * pt.rg.err_fisher;
        }
    }

    const double integral = trapezoid(mesh, P);
    const double quad_err = std::fabs(integral - trapezoid_thinned(mesh, P));
    const double data_err = trapezoid(mesh, Perr);

    InequalityVerdict v;
    v.name = Ineq::str1;
    v.lhs = Ic;
    v.rhs = k2 * If + q2 * Ig - k2 * q2 * integral;
    v.noise = Ierr + k2 * q2 * (quad_err + data_err);
    v.slack = v.rhs - v.lhs;
    v.rel_slack = v.slack / std::max(std::fabs(v.lhs), std::fabs(v.rhs));
    v.holds = v.slack >= -v.noise;
    v.near_equality = std::fabs(v.slack) <= 10.0 * v.noise;
    return v;
}

} // namespace logconc
