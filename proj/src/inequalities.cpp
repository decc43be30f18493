#include "logconc/inequalities.hpp"

#include "logconc/errors.hpp"
#include "logconc/heatflow.hpp"

#include <algorithm>
#include <cmath>

namespace logconc {

namespace {

InequalityVerdict make_verdict(Ineq name, double lhs, double e_lhs, double rhs,
                               double e_rhs)
{
    if (!std::isfinite(lhs) || !std::isfinite(rhs))
        throw contract_error("inequality verdict: non-finite side");
    InequalityVerdict v;
    v.name = name;
    v.lhs = lhs;
    v.rhs = rhs;
    v.slack = rhs - lhs;
    v.noise = e_lhs + e_rhs;
    const double scale = std::max(std::fabs(lhs), std::fabs(rhs));
    v.rel_slack = scale > 0.0 ? v.slack / scale : 0.0;
    v.holds = v.slack >= -v.noise;
    v.near_equality = std::fabs(v.slack) <= 10.0 * v.noise;
    return v;
}

void require_log_concave(const PairAnalysis& p, const char* op)
{
    if (!p.f_log_concave || !p.g_log_concave)
        throw precondition_error(std::string(op) + ": inputs must be log-concave");
}

void require_positive_j(const PairAnalysis& p, const char* op)
{
    if (p.f.fisher_second <= 0.0 || p.g.fisher_second <= 0.0 ||
        p.conv.fisher_second <= 0.0)
        throw precondition_error(std::string(op) +
                                 ": second-order functional must be positive");
}

AnalyticDensity wrap_axis(const Factor& fac)
{
    AnalyticDensity d;
    d.dim = 1;
    d.factor[0] = fac;
    return d;
}

double default_spacing(const AnalyticDensity& d)
{
    double h = 1e300;
    const double divisor = d.dim == 1 ? 50.0 : 16.0;
    for (int a = 0; a < d.dim; ++a)
        h = std::min(h, d.factor[a].stddev() / divisor);
    return h;
}

} // namespace

const char* ineq_name(Ineq q)
{
    switch (q) {
    case Ineq::ine_main: return "INE_MAIN";
    case Ineq::sharp2: return "SHARP2";
    case Ineq::epi: return "EPI";
    case Ineq::blachman_stam: return "BLACHMAN_STAM";
    case Ineq::j_geq_i2: return "J_GEQ_I2";
    case Ineq::cross_bound: return "CROSS_BOUND";
    case Ineq::new1: return "NEW1";
    case Ineq::new11: return "NEW11";
    case Ineq::ex1: return "EX1";
    case Ineq::mean1: return "MEAN1";
    case Ineq::str1: return "STR1";
    }
    return "?";
}

PairAnalysis analyze_pair(const AnalyticDensity& f, const AnalyticDensity& g,
                          GridSpec spec)
{
    if (f.dim != g.dim) throw contract_error("analyze_pair: dimension mismatch");

    PairAnalysis p;
    p.dim = f.dim;
    p.f_desc = f.describe();
    p.g_desc = g.describe();

    if (spec.spacing <= 0.0)
        spec.spacing = std::min(default_spacing(f), default_spacing(g));

    const GridDensity gf = discretize(f, spec);
    const GridDensity gg = discretize(g, spec);
    p.f_log_concave = check_log_concavity(gf).is_log_concave;
    p.g_log_concave = check_log_concavity(gg).is_log_concave;

    p.f = functionals_analytic(f, spec);
    p.g = functionals_analytic(g, spec);
    p.mf = fisher_matrix(f, gf);
    p.mg = fisher_matrix(g, gg);
    p.cross = cross_fisher(p.mf, p.mg);

    GridDensity conv;
    if (f.dim == 1) {
        conv = convolve(gf, gg);
    } else {
        // Axis factorization: every 2D density here is a product, and the
        // convolution of products is the product of axis convolutions.
        GridSpec axis_spec = spec;
        GridDensity cx, cy;
        for (int axis = 0; axis < 2; ++axis) {
            const GridDensity cf = discretize(wrap_axis(f.factor[axis]), axis_spec);
            const GridDensity cg = discretize(wrap_axis(g.factor[axis]), axis_spec);
            (axis == 0 ? cx : cy) = convolve(cf, cg);
        }
        conv = tensor_product(cx, cy);
    }
    p.conv = functionals_grid(conv);
    return p;
}

PairAnalysis analyze_pair(const GridDensity& f, const GridDensity& g)
{
    if (f.dim != g.dim) throw contract_error("analyze_pair: dimension mismatch");
    PairAnalysis p;
    p.dim = f.dim;
    p.f_desc = "grid";
    p.g_desc = "grid";
    p.f_log_concave = check_log_concavity(f).is_log_concave;
    p.g_log_concave = check_log_concavity(g).is_log_concave;
    p.f = functionals_grid(f);
    p.g = functionals_grid(g);
    p.mf = fisher_matrix(f);
    p.mg = fisher_matrix(g);
    p.cross = cross_fisher(p.mf, p.mg);
    p.conv = functionals_grid(convolve(f, g));
    return p;
}

InequalityVerdict verify_ine_main(const PairAnalysis& p, double a, double b)
{
    if (a <= 0.0 || b <= 0.0) throw domain_error("verify_ine_main: a, b must be > 0");
    require_log_concave(p, "verify_ine_main");
    const double c4 = std::pow(a + b, 4);
    const double rhs = (std::pow(a, 4) * p.f.fisher_second +
                        std::pow(b, 4) * p.g.fisher_second +
                        2.0 * a * a * b * b * p.cross.value) /
                       c4;
    const double e_rhs = (std::pow(a, 4) * p.f.err_fisher_second +
                          std::pow(b, 4) * p.g.err_fisher_second +
                          2.0 * a * a * b * b * p.cross.error) /
                         c4;
    return make_verdict(Ineq::ine_main, p.conv.fisher_second,
                        p.conv.err_fisher_second, rhs, e_rhs);
}

InequalityVerdict verify_sharp2(const PairAnalysis& p)
{
    require_log_concave(p, "verify_sharp2");
    require_positive_j(p, "verify_sharp2");
    const double jf = p.f.fisher_second, jg = p.g.fisher_second;
    const double jc = p.conv.fisher_second;
    const double lhs = 1.0 / std::sqrt(jf) + 1.0 / std::sqrt(jg);
    const double e_lhs = 0.5 * p.f.err_fisher_second / std::pow(jf, 1.5) +
                         0.5 * p.g.err_fisher_second / std::pow(jg, 1.5);
    const double rhs = 1.0 / std::sqrt(jc);
    const double e_rhs = 0.5 * p.conv.err_fisher_second / std::pow(jc, 1.5);
    return make_verdict(Ineq::sharp2, lhs, e_lhs, rhs, e_rhs);
}

InequalityVerdict verify_epi(const PairAnalysis& p)
{
    return make_verdict(Ineq::epi, p.f.entropy_power + p.g.entropy_power,
                        p.f.err_entropy_power + p.g.err_entropy_power,
                        p.conv.entropy_power, p.conv.err_entropy_power);
}

InequalityVerdict verify_blachman_stam(const PairAnalysis& p)
{
    const double fi = p.f.fisher, gi = p.g.fisher, ci = p.conv.fisher;
    if (fi <= 0.0 || gi <= 0.0 || ci <= 0.0)
        throw precondition_error("verify_blachman_stam: fisher must be positive");
    const double lhs = 1.0 / fi + 1.0 / gi;
    const double e_lhs = p.f.err_fisher / (fi * fi) + p.g.err_fisher / (gi * gi);
    return make_verdict(Ineq::blachman_stam, lhs, e_lhs, 1.0 / ci,
                        p.conv.err_fisher / (ci * ci));
}

InequalityVerdict verify_j_geq_i2(const FunctionalReport& f)
{
    const double n = double(f.dim);
    return make_verdict(Ineq::j_geq_i2, f.fisher * f.fisher / n,
                        2.0 * f.fisher * f.err_fisher / n, f.fisher_second,
                        f.err_fisher_second);
}

InequalityVerdict verify_j_geq_i2(const PairAnalysis& p) { return verify_j_geq_i2(p.f); }

InequalityVerdict verify_cross_bound(const PairAnalysis& p)
{
    const double jf = p.f.fisher_second, jg = p.g.fisher_second;
    const double root = std::sqrt(jf * jg);
    if (root <= 0.0)
        throw precondition_error("verify_cross_bound: need positive J");
    const double e_rhs =
        (jg * p.f.err_fisher_second + jf * p.g.err_fisher_second) / (2.0 * root);
    return make_verdict(Ineq::cross_bound, p.cross.value, p.cross.error, root, e_rhs);
}

InequalityVerdict verify_mean1(const FisherMatrix& mf, const FunctionalReport& f)
{
    const ValueErr self = cross_fisher(mf, mf);
    return make_verdict(Ineq::mean1, self.value, self.error, f.fisher_second,
                        f.err_fisher_second);
}

InequalityVerdict verify_mean1(const PairAnalysis& p) { return verify_mean1(p.mf, p.f); }

RefinementVerdicts verify_new1_new11_ex1(const PairAnalysis& p, double a, double b)
{
    if (p.dim != 1)
        throw contract_error("verify_new1_new11_ex1: refinements are 1D statements");
    if (a <= 0.0 || b <= 0.0)
        throw domain_error("verify_new1_new11_ex1: a, b must be > 0");
    require_log_concave(p, "verify_new1_new11_ex1");
    require_positive_j(p, "verify_new1_new11_ex1");

    const double jf = p.f.fisher_second, e_jf = p.f.err_fisher_second;
    const double jg = p.g.fisher_second, e_jg = p.g.err_fisher_second;
    const double fi = p.f.fisher, e_fi = p.f.err_fisher;
    const double gi = p.g.fisher, e_gi = p.g.err_fisher;
    const double jc = p.conv.fisher_second, e_jc = p.conv.err_fisher_second;

    RefinementVerdicts out;
    const double z = a / (a + b);
    const double z3 = z * z * z, y3 = (1.0 - z) * (1.0 - z) * (1.0 - z);
    out.new1 = make_verdict(Ineq::new1, jc, e_jc, z3 * jf + y3 * jg,
                            z3 * e_jf + y3 * e_jg);

    // rhs(new11) = new1 rhs - w [ (a/b)(J_f - I_f^2) - (b/a)(J_g - I_g^2) ].
    // J_f and J_g each appear twice with opposite signs, so the noise is
    // propagated on the net coefficients, not per appearance; this matters
    // when a J is divergent and carries a large bar.
    const double w = a * a * b * b / std::pow(a + b, 4);
    out.new11_bracket = (a / b) * (jf - fi * fi) - (b / a) * (jg - gi * gi);
    const double c_jf = z3 - w * (a / b); // = a^4/(a+b)^4 >= 0
    const double c_jg = y3 + w * (b / a);
    const double rhs11 = c_jf * jf + c_jg * jg + w * (a / b) * fi * fi -
                         w * (b / a) * gi * gi;
    const double e_rhs11 = std::fabs(c_jf) * e_jf + std::fabs(c_jg) * e_jg +
                           w * (a / b) * 2.0 * fi * e_fi +
                           w * (b / a) * 2.0 * gi * e_gi;
    out.new11 = make_verdict(Ineq::new11, jc, e_jc, rhs11, e_rhs11);

    // calR = (1 - 2 (sqrt(J_f J_g) - I_f I_g) / (sqrt(J_f)+sqrt(J_g))^2)^(-1/2);
    // the argument is >= 1/2 by the arithmetic-geometric mean bound, so the
    // root never degenerates.
    const double rf = std::sqrt(jf), rg = std::sqrt(jg);
    const double d = rf * rg - fi * gi;
    const double s = (rf + rg) * (rf + rg);
    const double arg = 1.0 - 2.0 * d / s;
    out.calR = 1.0 / std::sqrt(arg);
    const double e_d = (jg * e_jf + jf * e_jg) / (2.0 * rf * rg) + fi * e_gi + gi * e_fi;
    const double e_s = (1.0 + rg / rf) * e_jf + (1.0 + rf / rg) * e_jg;
    const double e_arg = 2.0 * e_d / s + 2.0 * std::fabs(d) * e_s / (s * s);
    out.calR_err = 0.5 * std::pow(arg, -1.5) * e_arg;

    const double sum_inv = 1.0 / rf + 1.0 / rg;
    const double e_sum_inv = 0.5 * e_jf / std::pow(jf, 1.5) + 0.5 * e_jg / std::pow(jg, 1.5);
    const double lhs_ex1 = sum_inv * out.calR;
    const double e_lhs_ex1 = e_sum_inv * out.calR + sum_inv * out.calR_err;
    out.ex1 = make_verdict(Ineq::ex1, lhs_ex1, e_lhs_ex1, 1.0 / std::sqrt(jc),
                           0.5 * e_jc / std::pow(jc, 1.5));
    return out;
}

} // namespace logconc
