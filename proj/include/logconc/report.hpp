#pragma once

#include "logconc/densities.hpp"
#include "logconc/epiflow.hpp"
#include "logconc/functionals.hpp"
#include "logconc/inequalities.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

// Experiment orchestration: config loading with field-level validation, the
// three run fragments (functionals, verify, flow), and serialization.
//
// Determinism contract: report_json depends only on the effective config and
// the build, so two runs produce byte-identical report files.  Wall-clock
// and timestamps are serialized by metadata_json alone and never enter the
// report.  Per-item precondition and resolution failures are recorded on
// their row instead of aborting the batch; exit_code maps the outcome to the
// CLI contract (0 pass, 1 violation beyond noise, 3 resolution failure;
// config errors throw domain_error at load time and become exit 2).

namespace logconc {

inline constexpr const char* kToolkitVersion = "1.0.0";

/// One named density in a config.  Every analytic family is supported plus
/// the deliberately non-log-concave "two_bump" mixture, which only exists on
/// a grid; two_bump rows evaluate through the sampled path and are rejected
/// by flow jobs at load time.
struct DensitySpec {
    std::string name;
    std::string family;                // family_name(...) or "two_bump"
    std::map<std::string, double> params;
    int dim = 1;

    bool analytic() const { return family != "two_bump"; }
    AnalyticDensity build() const;             // contract_error for two_bump
    GridDensity build_grid(GridSpec spec) const;
    std::string describe() const;
};

/// One paired heat flow: a Lambda trace per weight plus one strengthened
/// EPI accumulation and a flow-level Fisher verdict at t = 0.
struct FlowJob {
    std::string f, g;
    std::vector<double> kappas;        // explicit weights in (0, 1)
    bool optimal_kappa = true;         // also run at the entropy-power share
    double horizon = 50.0;
    int per_octave = 1;                // trace mesh density (flow_mesh)
};

struct ExperimentConfig {
    std::vector<DensitySpec> densities;
    GridSpec grid{};
    std::vector<Ineq> inequalities;                   // static verdicts to run
    std::vector<std::pair<double, double>> weights;   // (a, b) sweep
    bool all_pairs = true;                            // every ordered same-dim pair
    std::vector<std::pair<std::string, std::string>> pairs; // used when !all_pairs
    std::vector<FlowJob> flows;
    int spot_checks = 16;
    unsigned long long seed = 1;

    const DensitySpec* find(const std::string& name) const;
};

/// Parse and validate; throws domain_error naming the offending field.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

enum class RowError { none, precondition, resolution };

struct FunctionalRow {
    std::string density;       // config name
    std::string family;        // family descriptor
    int dim = 1;
    FunctionalReport report{};
    int spot_passed = 0;
    int spot_total = 0;
    RowError error_kind = RowError::none;
    std::string error;
};

struct VerdictRow {
    std::string f, g;          // config names
    std::string f_family, g_family;
    Ineq name = Ineq::ine_main;
    bool weighted = false;     // a, b meaningful only when true
    double a = 1.0, b = 1.0;
    InequalityVerdict v{};
    RowError error_kind = RowError::none;
    std::string error;
};

struct FlowRow {
    std::string f, g;
    double kappa = 0.5;
    bool kappa_is_optimal = false;
    double horizon = 50.0;
    FlowTrace trace{};
    // Trace invariants, each judged against the per-sample noise:
    bool monotone = true;      // no increment above its error bar
    double worst_increase = 0.0;
    bool convex = true;        // interior second differences >= -1e-6
    double min_second_diff = 0.0;
    bool above_limit = true;   // lambda(t) >= limit - noise throughout
    double limit_gap = 0.0;    // |lambda(horizon) - limit|
    InequalityVerdict str1{};  // flow-level Fisher bound at t = 0
    RowError error_kind = RowError::none;
    std::string error;
};

struct EpiRow {
    std::string f, g;
    double horizon = 50.0;
    StrengthenedEpiReport rep{};
    std::string warning;       // partial-deficit note when horizon_ok is false
    RowError error_kind = RowError::none;
    std::string error;
};

struct RunReport {
    std::string version = kToolkitVersion;
    ExperimentConfig config;
    std::vector<FunctionalRow> functionals;
    std::vector<VerdictRow> verdicts;
    std::vector<FlowRow> flows;
    std::vector<EpiRow> epis;
    // Seconds per section; serialized only by metadata_json.
    double wall_functionals = 0.0;
    double wall_verify = 0.0;
    double wall_flow = 0.0;
};

/// The fragments append their rows and record their wall clock.
void run_functionals(const ExperimentConfig& cfg, RunReport& out);
void run_verify(const ExperimentConfig& cfg, RunReport& out);
void run_flow(const ExperimentConfig& cfg, RunReport& out);
RunReport run_all(const ExperimentConfig& cfg);

bool any_violation(const RunReport& r);          // a bound failed beyond noise
bool any_resolution_failure(const RunReport& r); // a row could not be resolved
int exit_code(const RunReport& r);               // 0 / 1 / 3

/// Deterministic report body (no timestamps, no wall clock).
std::string report_json(const RunReport& r);

/// Timestamps and wall clock live here, away from the reproducible body.
std::string metadata_json(const RunReport& r);

/// One row per verdict: name,f,g,a,b,lhs,rhs,slack,rel_slack,noise,holds,
/// near_equality,error (a and b empty on unweighted rows).
std::string verdicts_csv(const RunReport& r);

std::string functionals_csv(const RunReport& r);

/// Exact column set of the flow module:
/// t,lambda,dlambda,d2lambda,analytic_d1,analytic_d2,P,
/// H_f,H_g,H_conv,I_f,I_g,I_conv,J_f,J_g,J_conv.
std::string trace_csv(const FlowTrace& t);

/// Sampled density table, header "x,value" or "x,y,value", row-major; a
/// nonnegative t adds a "# t=..." comment line (flow snapshot form).
std::string grid_csv(const GridDensity& g, double t = -1.0);

/// Write report.json and meta.json into dir (created if absent); format
/// "csv" additionally writes functionals.csv, verdicts.csv, and one
/// trace_<f>__<g>__k<kappa>.csv per flow row.  Returns the file names
/// written, in order.
std::vector<std::string> write_outputs(const RunReport& r, const std::string& dir,
                                       const std::string& format);

/// Human-readable section totals for the terminal, one line per section.
std::string summarize(const RunReport& r);

} // namespace logconc
