#include "logconc/errors.hpp"
#include "logconc/report.hpp"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

using namespace logconc;

namespace {

ExperimentConfig cfg_of(const std::string& text) {
    return config_from_json_text(text);
}

void expect_cfg_error(const std::string& text, const std::string& needle) {
    try {
        (void)config_from_json_text(text);
        FAIL_CHECK("expected a config error mentioning '" << needle << "'");
    } catch (const domain_error& e) {
        const std::string msg = e.what();
        if (msg.find(needle) == std::string::npos)
            FAIL_CHECK("message '" << msg << "' lacks '" << needle << "'");
    }
}

const char* kTwoDensities = R"({
  "densities": [
    {"name": "g2", "family": "gaussian", "params": {"sigma": 2.0}},
    {"name": "gamma6", "family": "gamma", "params": {"shape": 6.0, "rate": 1.0}}
  ],
  "verify": {"pairs": [["g2", "gamma6"]], "weights": [[1, 1]]}
})";

} // namespace

TEST_CASE("empty config supplies the documented defaults")
{
    const ExperimentConfig cfg = cfg_of("{}");
    CHECK(cfg.densities.empty());
    CHECK(cfg.inequalities.size() == 10);
    const std::vector<std::pair<double, double>> sweep = {
        {1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}, {1.0, 5.0}};
    CHECK(cfg.weights == sweep);
    CHECK(cfg.all_pairs);
    CHECK(cfg.flows.empty());
    CHECK(cfg.spot_checks == 16);
    CHECK(cfg.seed == 1);

    // No densities: every fragment is empty and the run passes.
    const RunReport r = run_all(cfg);
    CHECK(r.functionals.empty());
    CHECK(r.verdicts.empty());
    CHECK(r.flows.empty());
    CHECK(r.epis.empty());
    CHECK(exit_code(r) == 0);
}

TEST_CASE("config errors name the offending field")
{
    expect_cfg_error("not json", "not valid JSON");
    expect_cfg_error(R"([1, 2])", "top level");
    expect_cfg_error(R"({"bogus": 1})", "unknown key 'bogus'");
    expect_cfg_error(R"({"densities": [{"family": "gaussian"}]})", "missing 'name'");
    expect_cfg_error(R"({"densities": [{"name": "a b", "family": "gaussian"}]})",
                     "letters, digits");
    expect_cfg_error(R"({"densities": [{"name": "x", "family": "gama"}]})",
                     "densities[0]");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gamma", "params": {"shape": -1.0}}]})",
        "densities[0]");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"rate": 1.0}}]})",
        "unknown parameter");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}},
                          {"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}]})",
        "duplicate density name");
    expect_cfg_error(R"({"densities": [{"name": "x", "family": "gaussian", "dim": 3}]})",
                     "dim must be 1 or 2");
    expect_cfg_error(
        R"({"densities": [{"name": "b", "family": "two_bump", "dim": 2}]})",
        "two_bump supports dim = 1");
    expect_cfg_error(
        R"({"densities": [{"name": "b", "family": "two_bump", "params": {"sep": 1.0}}]})",
        "unknown parameter 'sep'");
    expect_cfg_error(R"({"grid": {"quantile": 0.5}})", "grid.quantile");
    expect_cfg_error(R"({"grid": {"spacing": -0.1}})", "grid.spacing");
    expect_cfg_error(R"({"verify": {"inequalities": ["NOPE"]}})",
                     "unknown inequality");
    expect_cfg_error(R"({"verify": {"inequalities": ["STR1"]}})", "flow-level");
    expect_cfg_error(R"({"verify": {"weights": [[0.0, 1.0]]}})", "positive");
    expect_cfg_error(R"({"verify": {"weights": []}})", "at least one");
    expect_cfg_error(R"({"verify": {"pairs": [["x", "y"]]}})", "unknown density");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}},
                          {"name": "y", "family": "gaussian", "params": {"sigma": 1.0}, "dim": 2}],
            "verify": {"pairs": [["x", "y"]]}})",
        "share a dimension");
    expect_cfg_error(R"({"flow": [{"f": "x"}]})", "missing 'f' or 'g'");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}],
            "flow": [{"f": "x", "g": "x", "kappas": [1.5]}]})",
        "(0, 1)");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}],
            "flow": [{"f": "x", "g": "x", "horizon": 0.0}]})",
        "must be positive");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}],
            "flow": [{"f": "x", "g": "x", "per_octave": 0}]})",
        "[1, 16]");
    expect_cfg_error(
        R"({"densities": [{"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}],
            "flow": [{"f": "x", "g": "x", "optimal_kappa": false}]})",
        "needs kappas");
    expect_cfg_error(
        R"({"densities": [{"name": "b", "family": "two_bump"},
                          {"name": "x", "family": "gaussian", "params": {"sigma": 1.0}}],
            "flow": [{"f": "b", "g": "x"}]})",
        "analytic");
    expect_cfg_error(R"({"spot_checks": -1})", "[0, 100000]");
    expect_cfg_error(R"({"seed": -5})", "nonnegative");
}

TEST_CASE("functionals fragment matches the closed forms")
{
    const ExperimentConfig cfg = cfg_of(kTwoDensities);
    RunReport r;
    r.config = cfg;
    run_functionals(cfg, r);
    REQUIRE(r.functionals.size() == 2);

    const FunctionalRow& g2 = r.functionals[0];
    CHECK(g2.error_kind == RowError::none);
    CHECK(g2.family == "gaussian(sigma=2)");
    CHECK(g2.report.entropy == doctest::Approx(1.7655121234846453).epsilon(1e-9));
    CHECK(g2.report.fisher == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(g2.report.fisher_second == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(g2.spot_passed == 16);
    CHECK(g2.spot_total == 16);

    const FunctionalRow& g6 = r.functionals[1];
    CHECK(g6.report.fisher == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(g6.report.fisher_second == doctest::Approx(5.0 / 24.0).epsilon(1e-4));
    CHECK(g6.spot_passed == 16);

    // Spot checks can be disabled without touching the functionals.
    ExperimentConfig quiet = cfg;
    quiet.spot_checks = 0;
    RunReport r2;
    run_functionals(quiet, r2);
    CHECK(r2.functionals[0].spot_total == 0);
    CHECK(r2.functionals[0].report.entropy == r.functionals[0].report.entropy);
}

TEST_CASE("two bump density evaluates through the sampled path")
{
    const ExperimentConfig cfg = cfg_of(
        R"({"densities": [{"name": "b", "family": "two_bump",
                           "params": {"separation": 3.0, "sigma": 0.25, "spacing": 0.01}}]})");
    RunReport r;
    run_functionals(cfg, r);
    REQUIRE(r.functionals.size() == 1);
    const FunctionalRow& row = r.functionals[0];
    CHECK(row.error_kind == RowError::none);
    CHECK(row.family.find("two_bump(") == 0);
    CHECK(row.report.entropy > 0.0);
    CHECK(row.report.fisher > 0.0);
    CHECK(row.spot_total == 0); // no closed form to audit against
}

TEST_CASE("verify fragment flags matched gaussians and reports guard errors")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [
        {"name": "g1", "family": "gaussian", "params": {"sigma": 1.0}},
        {"name": "g2", "family": "gaussian", "params": {"sigma": 2.0}},
        {"name": "bump", "family": "two_bump"}
      ],
      "verify": {"pairs": [["g1", "g2"], ["bump", "g1"]], "weights": [[1, 2]]}
    })");
    RunReport r;
    run_verify(cfg, r);
    // 10 rows per pair: INE_MAIN, six singles, three refinements.
    REQUIRE(r.verdicts.size() == 20);

    int near = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        const VerdictRow& row = r.verdicts[i];
        CHECK(row.f == "g1");
        CHECK(row.error_kind == RowError::none);
        CHECK(row.v.holds);
        if (row.v.near_equality) ++near;
    }
    // Matched (a, b) = (sigma_f, sigma_g) makes every bound tight.
    CHECK(near == 10);

    int guard_errors = 0, evaluated = 0;
    for (std::size_t i = 10; i < 20; ++i) {
        const VerdictRow& row = r.verdicts[i];
        CHECK(row.f == "bump");
        if (row.error_kind == RowError::precondition) {
            CHECK(row.error.find("log-concave") != std::string::npos);
            ++guard_errors;
        } else {
            CHECK(row.v.holds); // EPI and friends hold for any densities
            ++evaluated;
        }
    }
    CHECK(guard_errors == 5); // INE_MAIN, SHARP2, NEW1, NEW11, EX1
    CHECK(evaluated == 5);    // EPI, BLACHMAN_STAM, J_GEQ_I2, CROSS_BOUND, MEAN1

    CHECK_FALSE(any_violation(r));
    CHECK(exit_code(r) == 0);
}

TEST_CASE("verify skips the one-dimensional refinements for 2d pairs")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [{"name": "g", "family": "gaussian", "params": {"sigma": 1.0}, "dim": 2}],
      "verify": {"weights": [[1, 1]]}
    })");
    RunReport r;
    run_verify(cfg, r);
    REQUIRE(r.verdicts.size() == 7); // INE_MAIN + six singles, no refinements
    for (const VerdictRow& row : r.verdicts) {
        CHECK(row.error_kind == RowError::none);
        CHECK(row.v.holds);
        CHECK(row.v.near_equality);
    }
}

TEST_CASE("flow fragment certifies the trace invariants")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [{"name": "g1", "family": "gaussian", "params": {"sigma": 1.0}}],
      "flow": [{"f": "g1", "g": "g1", "kappas": [0.5],
                "optimal_kappa": false, "horizon": 2.0}]
    })");
    RunReport r;
    run_flow(cfg, r);
    REQUIRE(r.flows.size() == 1);
    REQUIRE(r.epis.size() == 1);

    const FlowRow& row = r.flows[0];
    CHECK(row.error_kind == RowError::none);
    CHECK(row.kappa == 0.5);
    CHECK_FALSE(row.kappa_is_optimal);
    CHECK(row.monotone);
    CHECK(row.convex);
    CHECK(row.above_limit);
    CHECK(row.limit_gap <= 1e-9); // equal variances at kappa 1/2: fixed point
    CHECK(row.str1.holds);
    CHECK(row.str1.near_equality);
    CHECK(row.trace.lambda.size() == row.trace.times.size());

    const EpiRow& er = r.epis[0];
    CHECK(er.error_kind == RowError::none);
    CHECK(std::fabs(er.rep.R - 1.0) <= 1e-8);
    CHECK(er.rep.sep_holds);
    // Zero deficit cannot clear a relative tail bar; the row carries the
    // partial-deficit warning and the run still passes.
    CHECK_FALSE(er.rep.horizon_ok);
    CHECK_FALSE(er.warning.empty());
    CHECK(exit_code(r) == 0);
}

TEST_CASE("resolution failures surface as exit code 3")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [{"name": "g1", "family": "gaussian", "params": {"sigma": 1.0}}],
      "grid": {"spacing": 0.5},
      "flow": [{"f": "g1", "g": "g1", "kappas": [0.5],
                "optimal_kappa": false, "horizon": 2.0}]
    })");
    RunReport r;
    run_flow(cfg, r);
    REQUIRE(r.flows.size() == 1);
    // The trace path refines its own mesh spacing below the configured value
    // when kernel aliasing would bite, so the coarse grid only breaks the
    // static t = 0 evaluations.
    CHECK(r.flows[0].error_kind == RowError::none);
    CHECK(r.flows[0].monotone);
    CHECK(r.epis[0].error_kind == RowError::resolution);
    CHECK(r.epis[0].error.find("too coarse") != std::string::npos);
    CHECK_FALSE(any_violation(r));
    CHECK(any_resolution_failure(r));
    CHECK(exit_code(r) == 3);

    RunReport rf;
    run_functionals(cfg, rf);
    CHECK(rf.functionals[0].error_kind == RowError::resolution);
    CHECK(exit_code(rf) == 3);
}

TEST_CASE("exit codes rank violations over resolution failures")
{
    RunReport r;
    VerdictRow bad;
    bad.v.holds = false;
    r.verdicts.push_back(bad);
    CHECK(any_violation(r));
    CHECK(exit_code(r) == 1);

    VerdictRow res;
    res.error_kind = RowError::resolution;
    r.verdicts.push_back(res);
    CHECK(exit_code(r) == 1); // the violation stays the headline

    RunReport r2;
    r2.verdicts.push_back(res);
    CHECK(exit_code(r2) == 3);

    RunReport r3;
    VerdictRow pre;
    pre.v.holds = true;
    pre.error_kind = RowError::precondition;
    r3.verdicts.push_back(pre);
    CHECK(exit_code(r3) == 0); // guard reports do not fail the run

    RunReport r4;
    FlowRow fr;
    fr.str1.holds = true;
    fr.monotone = false;
    r4.flows.push_back(fr);
    CHECK(exit_code(r4) == 1);

    RunReport r5;
    EpiRow er;
    er.rep.sep_holds = false;
    r5.epis.push_back(er);
    CHECK(exit_code(r5) == 1);
}

TEST_CASE("report json is deterministic and timestamp free")
{
    const ExperimentConfig cfg = cfg_of(kTwoDensities);
    const RunReport a = run_all(cfg);
    const RunReport b = run_all(cfg);
    const std::string ja = report_json(a);
    CHECK(ja == report_json(b));
    CHECK(ja.find("generated_at") == std::string::npos);
    CHECK(ja.find("wall_clock") == std::string::npos);

    const std::string meta = metadata_json(a);
    CHECK(meta.find("generated_at") != std::string::npos);
    CHECK(meta.find("wall_clock_seconds") != std::string::npos);
    CHECK(meta.find("\"exit_code\": 0") != std::string::npos);

    const std::string sum = summarize(a);
    CHECK(sum.find("functionals: 2 densities") != std::string::npos);
    CHECK(sum.find("verify:") != std::string::npos);
}

TEST_CASE("csv tables carry the ordained headers")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [{"name": "g1", "family": "gaussian", "params": {"sigma": 1.0}},
                    {"name": "bump", "family": "two_bump"}],
      "verify": {"pairs": [["g1", "g1"]], "weights": [[1, 1]]},
      "flow": [{"f": "g1", "g": "g1", "kappas": [0.5],
                "optimal_kappa": false, "horizon": 2.0}]
    })");
    const RunReport r = run_all(cfg);

    const std::string vcsv = verdicts_csv(r);
    CHECK(vcsv.rfind("name,f,g,a,b,lhs,rhs,slack,rel_slack,noise,holds,"
                     "near_equality,error\n", 0) == 0);

    const std::string fcsv = functionals_csv(r);
    CHECK(fcsv.rfind("density,family,dim,entropy,", 0) == 0);
    // two_bump's descriptor contains commas, so the field arrives quoted.
    CHECK(fcsv.find("\"two_bump(") != std::string::npos);

    REQUIRE(!r.flows.empty());
    const std::string tcsv = trace_csv(r.flows[0].trace);
    CHECK(tcsv.rfind("t,lambda,dlambda,d2lambda,analytic_d1,analytic_d2,P,"
                     "H_f,H_g,H_conv,I_f,I_g,I_conv,J_f,J_g,J_conv\n", 0) == 0);
    // one line per mesh point plus the header
    std::size_t lines = 0;
    for (char c : tcsv)
        if (c == '\n') ++lines;
    CHECK(lines == r.flows[0].trace.times.size() + 1);
}

TEST_CASE("grid csv serializes samples row-major")
{
    const GridDensity g1 = discretize(make_gaussian(1.0), GridSpec{0.05, 8.0, 1e-12});
    const std::string c1 = grid_csv(g1);
    CHECK(c1.rfind("x,value\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : c1)
        if (c == '\n') ++lines;
    CHECK(lines == g1.ax[0].count + 1);

    const std::string snap = grid_csv(g1, 0.25);
    CHECK(snap.rfind("# t=0.25\nx,value\n", 0) == 0);

    const GridDensity g2 = discretize(make_gaussian(1.0, 2), GridSpec{0.1, 8.0, 1e-12});
    const std::string c2 = grid_csv(g2);
    CHECK(c2.rfind("x,y,value\n", 0) == 0);
}

TEST_CASE("write outputs creates the report set")
{
    const ExperimentConfig cfg = cfg_of(R"({
      "densities": [{"name": "g1", "family": "gaussian", "params": {"sigma": 1.0}}],
      "verify": {"pairs": [["g1", "g1"]], "weights": [[1, 1]]},
      "flow": [{"f": "g1", "g": "g1", "kappas": [0.5],
                "optimal_kappa": false, "horizon": 2.0}]
    })");
    const RunReport r = run_all(cfg);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "logconc_report_test";
    fs::remove_all(dir);

    const std::vector<std::string> jf = write_outputs(r, dir.string(), "json");
    CHECK(jf == std::vector<std::string>{"report.json", "meta.json"});
    CHECK(fs::exists(dir / "report.json"));

    const std::vector<std::string> cf = write_outputs(r, dir.string(), "csv");
    REQUIRE(cf.size() == 5);
    CHECK(cf[2] == "functionals.csv");
    CHECK(cf[3] == "verdicts.csv");
    CHECK(cf[4] == "trace_g1__g1__k0.5.csv");
    CHECK(fs::exists(dir / cf[4]));

    CHECK_THROWS_AS((void)write_outputs(r, dir.string(), "xml"), domain_error);
    fs::remove_all(dir);
}

TEST_CASE("bundled configs stay loadable")
{
    const std::string base = LOGCONC_CONFIG_DIR;
    const ExperimentConfig dflt = load_config(base + "/default.json");
    CHECK(dflt.densities.size() == 15);
    CHECK_FALSE(dflt.all_pairs);
    CHECK(dflt.pairs.size() == 32);
    CHECK(dflt.flows.size() == 3);
    CHECK(dflt.weights.size() == 4);

    const ExperimentConfig quick = load_config(base + "/quick.json");
    CHECK(quick.densities.size() == 3);

    CHECK_THROWS_AS((void)load_config(base + "/no_such_file.json"), domain_error);
}
