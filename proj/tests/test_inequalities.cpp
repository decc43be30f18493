#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logconc/densities.hpp"
#include "logconc/errors.hpp"
#include "logconc/inequalities.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

using namespace logconc;

namespace {

constexpr double kTwoPiE = 17.079468445347134;

const std::vector<std::pair<double, double>> kMatchedPairs = {
    {1.0, 1.0}, {1.0, 2.0}, {1.0, 5.0}};

std::vector<AnalyticDensity> bundle()
{
    return {
        make_family(Family::gamma, {{"shape", 3.0}}),
        make_family(Family::gamma, {{"shape", 6.0}}),
        make_family(Family::logistic, {}),
        make_family(Family::gumbel, {}),
        make_family(Family::weibull, {{"shape", 2.0}}),
    };
}

void check_tight(const InequalityVerdict& v, double expected_lhs)
{
    CAPTURE(ineq_name(v.name));
    CHECK(v.holds);
    CHECK(v.near_equality);
    CHECK(std::fabs(v.slack) <= 10.0 * v.noise);
    CHECK(v.lhs == doctest::Approx(expected_lhs).epsilon(1e-9));
    CHECK(v.rhs == doctest::Approx(expected_lhs).epsilon(1e-9));
}

} // namespace

TEST_CASE("gaussian pairs meet every bound with near equality")
{
    for (int dim : {1, 2}) {
        for (auto [a, b] : kMatchedPairs) {
            CAPTURE(dim);
            CAPTURE(a);
            CAPTURE(b);
            PairAnalysis p = analyze_pair(make_gaussian(a, dim), make_gaussian(b, dim));
            const double s = a + b;

            check_tight(verify_ine_main(p, a, b), dim / (s * s));
            check_tight(verify_sharp2(p), s / std::sqrt(double(dim)));
            check_tight(verify_epi(p), kTwoPiE * s);
            check_tight(verify_blachman_stam(p), s / dim);
            check_tight(verify_cross_bound(p), dim / (a * b));
            check_tight(verify_mean1(p), dim / (a * a));
            check_tight(verify_j_geq_i2(p), dim / (a * a));

            if (dim == 1) {
                RefinementVerdicts r = verify_new1_new11_ex1(p, a, b);
                check_tight(r.new1, 1.0 / (s * s));
                check_tight(r.new11, 1.0 / (s * s));
                check_tight(r.ex1, s);
                CHECK(r.calR == doctest::Approx(1.0).epsilon(1e-9));
                CHECK(r.calR_err < 1e-9);
                // J = I^2 for gaussians, so the remainder bracket vanishes
                CHECK(std::fabs(r.new11_bracket) < 1e-9);
            }
        }
    }
}

TEST_CASE("bundle pairs satisfy all ten bounds with slack above noise")
{
    // gamma(3) has divergent J and weibull(2) divergent I and J; their
    // grid-limited values appear on the large side of every bound, so the
    // verdicts stay meaningful.  Measured worst slack/noise is 1.52
    // (weibull|weibull); guard a floor of 1.3.
    const auto fams = bundle();
    double worst = 1e300;
    std::string worst_tag;
    for (const auto& f : fams) {
        for (const auto& g : fams) {
            PairAnalysis p = analyze_pair(f, g);
            CAPTURE(p.f_desc);
            CAPTURE(p.g_desc);

            std::vector<InequalityVerdict> vs;
            vs.push_back(verify_ine_main(p, 1.0, 1.0));
            vs.push_back(verify_sharp2(p));
            vs.push_back(verify_epi(p));
            vs.push_back(verify_blachman_stam(p));
            vs.push_back(verify_j_geq_i2(p));
            vs.push_back(verify_cross_bound(p));
            vs.push_back(verify_mean1(p));
            RefinementVerdicts r = verify_new1_new11_ex1(p, 1.0, 1.0);
            vs.push_back(r.new1);
            vs.push_back(r.new11);
            vs.push_back(r.ex1);

            for (const auto& v : vs) {
                CAPTURE(ineq_name(v.name));
                CHECK(v.holds);
                CHECK(v.slack > v.noise);
                const double ratio = v.slack / v.noise;
                if (ratio < worst) {
                    worst = ratio;
                    worst_tag = std::string(ineq_name(v.name)) + " " + p.f_desc;
                }
            }

            CHECK(r.calR >= 1.0 - 1e-12);
            CHECK(r.calR <= std::sqrt(2.0) + 1e-12);
        }
    }
    CAPTURE(worst_tag);
    CHECK(worst > 1.3);
}

TEST_CASE("verdicts are symmetric under swapping the pair")
{
    auto g6 = make_family(Family::gamma, {{"shape", 6.0}});
    auto lg = make_family(Family::logistic, {});
    PairAnalysis p = analyze_pair(g6, lg);
    PairAnalysis q = analyze_pair(lg, g6);

    InequalityVerdict v1 = verify_ine_main(p, 1.0, 2.0);
    InequalityVerdict v2 = verify_ine_main(q, 2.0, 1.0);
    CHECK(v1.lhs == doctest::Approx(v2.lhs).epsilon(1e-12));
    CHECK(v1.rhs == doctest::Approx(v2.rhs).epsilon(1e-12));

    CHECK(verify_sharp2(p).slack == doctest::Approx(verify_sharp2(q).slack).epsilon(1e-12));
    CHECK(verify_epi(p).slack == doctest::Approx(verify_epi(q).slack).epsilon(1e-12));
}

TEST_CASE("verdicts transform covariantly under dilation")
{
    // Squeezing both densities by alpha multiplies every J by alpha^4, so
    // both sides of the convolution bound scale together and the outcome
    // is invariant.
    const double alpha = 1.5;
    const double a4 = alpha * alpha * alpha * alpha;
    auto g6 = make_family(Family::gamma, {{"shape", 6.0}});
    auto lg = make_family(Family::logistic, {});

    InequalityVerdict base = verify_ine_main(analyze_pair(g6, lg), 1.0, 2.0);
    InequalityVerdict scaled =
        verify_ine_main(analyze_pair(dilate(g6, alpha), dilate(lg, alpha)), 1.0, 2.0);

    CHECK(scaled.lhs == doctest::Approx(base.lhs * a4).epsilon(1e-6));
    CHECK(scaled.rhs == doctest::Approx(base.rhs * a4).epsilon(1e-6));
    CHECK(scaled.holds == base.holds);
}

TEST_CASE("refinement chain orders the upper bounds")
{
    // With the cross term bounded by sqrt(J(f) J(g)), the matched-weight
    // bound weakens monotonically toward the cubic-weight form.
    const double a = 1.0, b = 2.0;
    PairAnalysis p = analyze_pair(make_family(Family::gamma, {{"shape", 6.0}}),
                                  make_family(Family::logistic, {}));

    InequalityVerdict main = verify_ine_main(p, a, b);
    RefinementVerdicts r = verify_new1_new11_ex1(p, a, b);

    const double jf = p.f.fisher_second;
    const double jg = p.g.fisher_second;
    const double s4 = std::pow(a + b, 4);
    const double rhs_sqrt =
        (a * a * a * a * jf + b * b * b * b * jg + 2.0 * a * a * b * b * std::sqrt(jf * jg)) / s4;

    const double budget = main.noise + r.new1.noise;
    CHECK(main.rhs <= rhs_sqrt + budget);
    CHECK(rhs_sqrt <= r.new1.rhs + budget);

    // new11 subtracts w times the recorded bracket from the cubic bound
    const double w = a * a * b * b / s4;
    CHECK(r.new11.rhs == doctest::Approx(r.new1.rhs - w * r.new11_bracket).epsilon(1e-12));
    CHECK(r.new11.holds);
}

TEST_CASE("log-concavity preconditions gate the shape-dependent bounds")
{
    GridDensity bump = make_two_bump(3.0, 0.25, 0.01);
    PairAnalysis p = analyze_pair(bump, bump);
    CHECK_FALSE(p.f_log_concave);
    CHECK_FALSE(p.g_log_concave);

    CHECK_THROWS_AS((void)verify_ine_main(p, 1.0, 1.0), precondition_error);
    CHECK_THROWS_AS((void)verify_sharp2(p), precondition_error);
    CHECK_THROWS_AS((void)verify_new1_new11_ex1(p, 1.0, 1.0), precondition_error);

    // entropy power and Fisher bounds need no shape assumption
    InequalityVerdict epi = verify_epi(p);
    CHECK(epi.holds);
    CHECK_FALSE(epi.near_equality);
    CHECK(verify_blachman_stam(p).holds);
    CHECK(verify_j_geq_i2(p).holds);
}

TEST_CASE("invalid weights and mismatched pairs are rejected")
{
    auto g6 = make_family(Family::gamma, {{"shape", 6.0}});
    PairAnalysis p = analyze_pair(g6, g6);
    CHECK_THROWS_AS((void)verify_ine_main(p, 0.0, 1.0), domain_error);
    CHECK_THROWS_AS((void)verify_ine_main(p, 1.0, -2.0), domain_error);

    PairAnalysis p2 = analyze_pair(make_gaussian(1.0, 2), make_gaussian(1.0, 2));
    CHECK_THROWS_AS((void)verify_new1_new11_ex1(p2, 1.0, 1.0), contract_error);
}

TEST_CASE("analysis caches match direct functional evaluation")
{
    auto g6 = make_family(Family::gamma, {{"shape", 6.0}});
    auto gm = make_gaussian(2.0, 1);
    PairAnalysis p = analyze_pair(g6, gm);

    FunctionalReport ref = functionals_analytic(g6);
    CHECK(p.f.entropy == doctest::Approx(ref.entropy).epsilon(1e-7));
    CHECK(p.f.fisher_second == doctest::Approx(ref.fisher_second).epsilon(1e-4));

    // slack and flags are consistent with the published sides
    InequalityVerdict v = verify_epi(p);
    CHECK(v.slack == doctest::Approx(v.rhs - v.lhs).epsilon(1e-12));
    CHECK(v.holds == (v.slack >= -v.noise));
    CHECK(v.near_equality == (std::fabs(v.slack) <= 10.0 * v.noise));
    CHECK(v.rel_slack ==
          doctest::Approx(v.slack / std::max(std::fabs(v.lhs), std::fabs(v.rhs))).epsilon(1e-12));
}
