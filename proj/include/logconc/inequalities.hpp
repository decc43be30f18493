#pragma once

#include "logconc/densities.hpp"
#include "logconc/functionals.hpp"
#include "logconc/grid.hpp"

#include <string>

// Signed-slack verdicts for the convolution inequalities.  Each verdict
// carries the quadrature noise of both sides; holds means slack >= -noise,
// so a discretization wobble can never report a false violation, and
// near_equality flags |slack| <= 10 noise for the sharpness cases.
//
// Densities with divergent I or J evaluate to grid-limited values with
// correspondingly large error bars; the flags in PairAnalysis say which
// functionals are exact limits.  The inequalities hold in the limit, and the
// grid-limited evaluation keeps the favorable side growing under refinement.

namespace logconc {

enum class Ineq {
    ine_main,
    sharp2,
    epi,
    blachman_stam,
    j_geq_i2,
    cross_bound,
    new1,
    new11,
    ex1,
    mean1,
    str1, // flow-level Fisher bound, produced by the flow module
};

const char* ineq_name(Ineq q);

struct InequalityVerdict {
    Ineq name{};
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;     // rhs - lhs; >= 0 means the inequality holds
    double rel_slack = 0.0; // slack / max(|lhs|, |rhs|)
    double noise = 0.0;     // combined quadrature error of both sides
    bool holds = false;
    bool near_equality = false;
};

/// Everything the verdicts need about one (f, g) pair, computed once:
/// functionals of f, g (analytic path when available) and of f*g (grid
/// path), Fisher matrices, the cross term, and the preconditions.
struct PairAnalysis {
    int dim = 1;
    std::string f_desc, g_desc;
    FunctionalReport f, g, conv;
    FisherMatrix mf, mg;
    ValueErr cross{}; // H(f,g) = sum_ij A_ij(f) A_ij(g)
    bool f_log_concave = true;
    bool g_log_concave = true;
};

/// Shared-spacing discretization, convolution, and functional evaluation.
/// The analytic overload uses the potential path for f and g and factors
/// 2D convolutions across axes (all 2D densities here are products).
PairAnalysis analyze_pair(const AnalyticDensity& f, const AnalyticDensity& g,
                          GridSpec spec = {});
PairAnalysis analyze_pair(const GridDensity& f, const GridDensity& g);

/// J(f*g) <= [a^4 J(f) + b^4 J(g) + 2 a^2 b^2 H(f,g)] / (a+b)^4.
InequalityVerdict verify_ine_main(const PairAnalysis& p, double a, double b);

/// 1/sqrt(J(f*g)) >= 1/sqrt(J(f)) + 1/sqrt(J(g)).
InequalityVerdict verify_sharp2(const PairAnalysis& p);

/// N(f*g) >= N(f) + N(g).
InequalityVerdict verify_epi(const PairAnalysis& p);

/// 1/I(f*g) >= 1/I(f) + 1/I(g).
InequalityVerdict verify_blachman_stam(const PairAnalysis& p);

/// J(f) >= I(f)^2 / n, evaluated on the pair's f.
InequalityVerdict verify_j_geq_i2(const FunctionalReport& f);
InequalityVerdict verify_j_geq_i2(const PairAnalysis& p);

/// H(f,g) <= sqrt(J(f) J(g)).
InequalityVerdict verify_cross_bound(const PairAnalysis& p);

/// sum_ij A_ij(f)^2 <= J(f), evaluated on the pair's f.
InequalityVerdict verify_mean1(const FisherMatrix& mf, const FunctionalReport& f);
InequalityVerdict verify_mean1(const PairAnalysis& p);

/// The 1D refinements sharing one (a, b):
///   new1   J(f*g) <= z^3 J(f) + (1-z)^3 J(g),  z = a/(a+b)
///   new11  new1 minus the remainder bracket
///            w [ (a/b)(J(f)-I(f)^2) - (b/a)(J(g)-I(g)^2) ],  w = a^2b^2/(a+b)^4
///   ex1    1/sqrt(J(f*g)) >= (1/sqrt(J(f)) + 1/sqrt(J(g))) calR
/// The bracket is a lower bound on a nonnegative remainder but is not itself
/// signed; its per-instance value is recorded instead of asserted.
struct RefinementVerdicts {
    InequalityVerdict new1, new11, ex1;
    double calR = 1.0;
    double calR_err = 0.0;
    double new11_bracket = 0.0;
};

RefinementVerdicts verify_new1_new11_ex1(const PairAnalysis& p, double a, double b);

} // namespace logconc
