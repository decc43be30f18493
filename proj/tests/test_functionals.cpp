// Functional evaluation against closed forms, on both the analytic-potential
// path and the sampled-log-density path.  Every oracle row also checks the
// reported error bound actually covers the observed deviation; the bounds are
// the contract downstream inequality verdicts rely on.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logconc/densities.hpp"
#include "logconc/functionals.hpp"

#include <cmath>

using namespace logconc;

namespace {

constexpr double kTwoPiE = 17.079468445347134;

struct OracleRow {
    const char* label;
    AnalyticDensity density;
    double entropy, fisher, fisher_second;
    double tol_h_a, tol_i_a, tol_j_a; // analytic-path tolerances
    double tol_h_g, tol_i_g, tol_j_g; // grid-path tolerances
};

void check_row(const OracleRow& row)
{
    const FunctionalReport a = functionals_analytic(row.density);
    const GridDensity g = discretize(row.density);
    const FunctionalReport b = functionals_grid(g);

    INFO(row.label << " analytic");
    CHECK(std::fabs(a.entropy - row.entropy) <= row.tol_h_a);
    CHECK(std::fabs(a.fisher - row.fisher) <= row.tol_i_a);
    CHECK(std::fabs(a.fisher_second - row.fisher_second) <= row.tol_j_a);
    CHECK(std::fabs(a.entropy - row.entropy) <= a.err_entropy);
    CHECK(std::fabs(a.fisher - row.fisher) <= a.err_fisher);
    CHECK(std::fabs(a.fisher_second - row.fisher_second) <= a.err_fisher_second);
    CHECK(a.fisher_is_finite);
    CHECK(a.fisher_second_is_finite);

    INFO(row.label << " grid");
    CHECK(std::fabs(b.entropy - row.entropy) <= row.tol_h_g);
    CHECK(std::fabs(b.fisher - row.fisher) <= row.tol_i_g);
    CHECK(std::fabs(b.fisher_second - row.fisher_second) <= row.tol_j_g);
    CHECK(std::fabs(b.entropy - row.entropy) <= b.err_entropy);
    CHECK(std::fabs(b.fisher - row.fisher) <= b.err_fisher);
    CHECK(std::fabs(b.fisher_second - row.fisher_second) <= b.err_fisher_second);

    const double n_exp = std::exp(2.0 * row.entropy / row.density.dim);
    CHECK(std::fabs(a.entropy_power - n_exp) <= a.err_entropy_power + 1e-9 * n_exp);
    CHECK(a.points >= 5);
    CHECK(a.spacing > 0.0);
    CHECK(a.dim == row.density.dim);
}

AnalyticDensity gamma_k(double k) { return make_family(Family::gamma, {{"shape", k}}); }

} // namespace

TEST_CASE("gaussian functionals hit closed forms at machine precision")
{
    for (double sigma : {0.5, 1.0, 2.0, 5.0}) {
        const double h = 0.5 * std::log(2.0 * M_PI * M_E * sigma);
        const double i = 1.0 / sigma;
        const double j = 1.0 / (sigma * sigma);
        check_row({"gaussian", make_gaussian(sigma), h, i, j,
                   2e-12, 2e-12, 2e-12, 2e-12, 2e-12, 2e-12});
    }
}

TEST_CASE("gamma entropies match the digamma closed form")
{
    // H = k - log r + lgamma(k) + (1 - k) psi(k); tighter with shape since the
    // support-edge kink weakens as f vanishes faster at zero.
    const double hs[] = {1.5772156649015329, 1.8475785103630110, 2.0234064639326536,
                         2.1535831566207437, 2.2569034006230436};
    const double tol[] = {2e-4, 6e-6, 5e-7, 1e-8, 5e-10};
    for (int k = 2; k <= 6; ++k) {
        const AnalyticDensity d = gamma_k(k);
        const FunctionalReport a = functionals_analytic(d);
        const FunctionalReport b = functionals_grid(discretize(d));
        CAPTURE(k);
        CHECK(std::fabs(a.entropy - hs[k - 2]) <= tol[k - 2]);
        CHECK(std::fabs(b.entropy - hs[k - 2]) <= tol[k - 2]);
        CHECK(std::fabs(a.entropy - hs[k - 2]) <= a.err_entropy);
        CHECK(std::fabs(b.entropy - hs[k - 2]) <= b.err_entropy);
    }
}

TEST_CASE("gamma fisher functionals match rational closed forms")
{
    // I = r^2/(k-2), J = (k-1) r^4 / ((k-2)(k-3)(k-4)).
    check_row({"gamma(5)", gamma_k(5), 2.1535831566207437, 1.0 / 3.0, 2.0 / 3.0,
               1e-8, 2e-4, 3e-6, 1e-8, 7e-2, 2.1e-1});
    check_row({"gamma(6)", gamma_k(6), 2.2569034006230436, 0.25, 5.0 / 24.0,
               5e-10, 5e-6, 4e-6, 5e-10, 4e-5, 5e-3});

    // At shape 4, I = 1/2 but J diverges: only the fisher column is exact.
    const AnalyticDensity d4 = gamma_k(4);
    const FunctionalReport a4 = functionals_analytic(d4);
    const FunctionalReport g4 = functionals_grid(discretize(d4));
    CHECK(std::fabs(a4.fisher - 0.5) <= 3e-5);
    CHECK(std::fabs(a4.fisher - 0.5) <= a4.err_fisher);
    CHECK(std::fabs(g4.fisher - 0.5) <= 2e-2);
    CHECK(std::fabs(g4.fisher - 0.5) <= g4.err_fisher);
    CHECK(a4.fisher_is_finite);
    CHECK_FALSE(a4.fisher_second_is_finite);
}

TEST_CASE("heavy-shape gamma second-order functional")
{
    // J(gamma(12)) = 11/720; high shape keeps every stencil far from the edge.
    const AnalyticDensity d = gamma_k(12);
    const double j = 11.0 / 720.0;
    const FunctionalReport a = functionals_analytic(d);
    const FunctionalReport b = functionals_grid(discretize(d));
    CHECK(std::fabs(a.fisher_second - j) <= 1e-11);
    CHECK(std::fabs(b.fisher_second - j) <= 5e-9);
    CHECK(std::fabs(a.fisher_second - j) <= a.err_fisher_second);
    CHECK(std::fabs(b.fisher_second - j) <= b.err_fisher_second);
}

TEST_CASE("logistic functionals: H = 2, I = 1/3, J = 2/15")
{
    check_row({"logistic", make_family(Family::logistic, {}), 2.0, 1.0 / 3.0, 2.0 / 15.0,
               2e-10, 1e-11, 5e-12, 2e-10, 2e-8, 5e-9});
}

TEST_CASE("gumbel functionals: H = 1 + euler gamma, I = 1, J = 2")
{
    check_row({"gumbel", make_family(Family::gumbel, {}), 1.5772156649015329, 1.0, 2.0,
               1e-10, 1e-11, 1e-11, 1e-10, 1e-7, 1e-7});
}

TEST_CASE("weibull shape-2 entropy")
{
    // H = euler_gamma/2 + 1 - log 2; I and J diverge at this shape, so only
    // the entropy column is comparable.
    const AnalyticDensity d = make_family(Family::weibull, {{"shape", 2.0}});
    const double h = 0.59546065189082112;
    const FunctionalReport a = functionals_analytic(d);
    const FunctionalReport b = functionals_grid(discretize(d));
    CHECK(std::fabs(a.entropy - h) <= 5e-5);
    CHECK(std::fabs(b.entropy - h) <= 5e-5);
    CHECK(std::fabs(a.entropy - h) <= a.err_entropy);
    CHECK(std::fabs(b.entropy - h) <= b.err_entropy);
    CHECK_FALSE(a.fisher_is_finite);
    CHECK_FALSE(a.fisher_second_is_finite);
}

TEST_CASE("divergence flags follow the family shape thresholds")
{
    auto gam = [](double k) { return gamma_k(k).factor[0]; };
    CHECK(family_fisher_finite(gam(1.0)));       // exponential: I = r^2
    CHECK_FALSE(family_fisher_finite(gam(1.5))); // x^(k-3) tail at zero
    CHECK(family_fisher_finite(gam(2.5)));
    CHECK(family_fisher_second_finite(gam(1.0))); // J = 0 exactly
    CHECK_FALSE(family_fisher_second_finite(gam(3.0)));
    CHECK_FALSE(family_fisher_second_finite(gam(4.0)));
    CHECK(family_fisher_second_finite(gam(4.5)));

    auto wei = [](double k) { return make_family(Family::weibull, {{"shape", k}}).factor[0]; };
    CHECK(family_fisher_finite(wei(1.0)));
    CHECK_FALSE(family_fisher_finite(wei(2.0)));
    CHECK(family_fisher_finite(wei(2.5)));
    CHECK_FALSE(family_fisher_second_finite(wei(2.5)));

    CHECK(family_fisher_finite(make_gaussian(1.0).factor[0]));
    CHECK(family_fisher_second_finite(make_family(Family::logistic, {}).factor[0]));
    CHECK(family_fisher_second_finite(make_family(Family::gumbel, {}).factor[0]));
}

TEST_CASE("divergent functionals grow under grid refinement")
{
    // J(gamma(3)) = +inf: the quadrature value is cutoff-limited near zero, so
    // halving the spacing moves the cutoff in and the value must climb.
    const AnalyticDensity d = gamma_k(3);
    const FunctionalReport a = functionals_analytic(d);
    CHECK_FALSE(a.fisher_second_is_finite);
    CHECK(a.fisher_second > 10.0);

    GridSpec coarse, fine;
    fine.spacing = d.factor[0].stddev() / 100.0;
    const FunctionalReport rc = functionals_grid(discretize(d, coarse));
    const FunctionalReport rf = functionals_grid(discretize(d, fine));
    CHECK(rf.fisher_second > 1.5 * rc.fisher_second);
}

TEST_CASE("exponential density: I = rate^2, J = 0")
{
    const AnalyticDensity d = make_family(Family::gamma, {{"shape", 1.0}, {"rate", 2.0}});
    const FunctionalReport a = functionals_analytic(d);
    CHECK(a.fisher_is_finite);
    CHECK(a.fisher_second_is_finite);
    CHECK(std::fabs(a.fisher - 4.0) <= std::max(a.err_fisher, 1e-8));
    CHECK(std::fabs(a.fisher_second) <= std::max(a.err_fisher_second, 1e-8));
    // H = 1 - log r
    CHECK(std::fabs(a.entropy - (1.0 - std::log(2.0))) <= a.err_entropy);
}

TEST_CASE("cross fisher term multiplies the 1D matrices")
{
    const GridDensity ga = discretize(make_gaussian(1.0));
    const GridDensity gb = discretize(make_gaussian(4.0));
    const FisherMatrix ma = fisher_matrix(ga);
    const FisherMatrix mb = fisher_matrix(gb);
    const ValueErr cross = cross_fisher(ma, mb);
    CHECK(std::fabs(cross.value - 0.25) <= 1e-10);
    CHECK(std::fabs(cross.value - 0.25) <= cross.error);

    const AnalyticDensity d4 = gamma_k(4), d6 = gamma_k(6);
    const FisherMatrix m4 = fisher_matrix(d4, discretize(d4));
    const FisherMatrix m6 = fisher_matrix(d6, discretize(d6));
    const ValueErr c46 = cross_fisher(m4, m6);
    CHECK(std::fabs(c46.value - 0.125) <= 1e-5);
    CHECK(std::fabs(c46.value - 0.125) <= c46.error);
}

TEST_CASE("2D product gaussian: H, I, J, N on both paths")
{
    const AnalyticDensity d = make_gaussian(1.0, 2);
    const double h2 = std::log(2.0 * M_PI * M_E);
    const FunctionalReport a = functionals_analytic(d);
    const GridDensity g = discretize(d);
    const FunctionalReport b = functionals_grid(g);

    for (const FunctionalReport* r : {&a, &b}) {
        CHECK(r->dim == 2);
        CHECK(std::fabs(r->entropy - h2) <= 5e-12);
        CHECK(std::fabs(r->fisher - 2.0) <= 5e-12);
        CHECK(std::fabs(r->fisher_second - 2.0) <= 5e-11);
        CHECK(std::fabs(r->entropy_power - kTwoPiE) <= 1e-10);
        CHECK(std::fabs(r->entropy - h2) <= r->err_entropy);
        CHECK(std::fabs(r->fisher - 2.0) <= r->err_fisher);
        CHECK(std::fabs(r->fisher_second - 2.0) <= r->err_fisher_second);
        CHECK(std::fabs(r->entropy_power - kTwoPiE) <= r->err_entropy_power);
    }

    const FisherMatrix m = fisher_matrix(g);
    CHECK(m.dim == 2);
    CHECK(std::fabs(m.a11 - 1.0) <= 1e-10);
    CHECK(std::fabs(m.a22 - 1.0) <= 1e-10);
    CHECK(std::fabs(m.a12) <= m.err + 1e-12);

    // 2D cross term of the matrix with itself: sum a_ij^2 = 2.
    const ValueErr c = cross_fisher(m, m);
    CHECK(std::fabs(c.value - 2.0) <= 1e-9);
}

TEST_CASE("2D mixed product: functionals add across axes")
{
    // gamma(6) x gaussian(1): every functional is the sum of the axis values.
    const AnalyticDensity d =
        make_product(gamma_k(6), make_gaussian(1.0));
    const double h = 2.2569034006230436 + 0.5 * std::log(2.0 * M_PI * M_E);
    const FunctionalReport a = functionals_analytic(d);
    CHECK(std::fabs(a.entropy - h) <= 1e-6);
    CHECK(std::fabs(a.fisher - 1.25) <= 2e-3);
    CHECK(std::fabs(a.fisher_second - (5.0 / 24.0 + 1.0)) <= 2e-3);
    CHECK(std::fabs(a.entropy - h) <= a.err_entropy);
    CHECK(std::fabs(a.fisher - 1.25) <= a.err_fisher);
    CHECK(std::fabs(a.fisher_second - (5.0 / 24.0 + 1.0)) <= a.err_fisher_second);

    const FisherMatrix m = fisher_matrix(d, discretize(d));
    CHECK(std::fabs(m.a11 - 0.25) <= 2e-3);
    CHECK(std::fabs(m.a22 - 1.0) <= 2e-3);
    CHECK(std::fabs(m.a12) <= m.err + 1e-6);
}

TEST_CASE("entropy power helper and spacing override")
{
    CHECK(entropy_power_of(1.4189385332046727, 1) == doctest::Approx(kTwoPiE).epsilon(1e-13));
    CHECK(entropy_power_of(2.8378770664093453, 2) == doctest::Approx(kTwoPiE).epsilon(1e-13));

    GridSpec spec;
    spec.spacing = 0.01;
    const FunctionalReport r = functionals_analytic(make_gaussian(1.0), spec);
    CHECK(r.spacing == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.points > 1000);
    CHECK(std::fabs(r.entropy - 1.4189385332046727) <= 1e-10);
}
