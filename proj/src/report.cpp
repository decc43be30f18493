#include "logconc/report.hpp"

#include "logconc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace logconc {

namespace {

using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kConvexityTol = 1e-6;

const std::vector<Ineq>& static_inequalities() {
    static const std::vector<Ineq> all = {
        Ineq::ine_main, Ineq::sharp2,      Ineq::epi,  Ineq::blachman_stam,
        Ineq::j_geq_i2, Ineq::cross_bound, Ineq::new1, Ineq::new11,
        Ineq::ex1,      Ineq::mean1,
    };
    return all;
}

bool is_refinement(Ineq q) {
    return q == Ineq::new1 || q == Ineq::new11 || q == Ineq::ex1;
}

[[noreturn]] void cfg_fail(const std::string& path, const std::string& what) {
    throw domain_error("config: " + path + ": " + what);
}

void check_keys(const njson& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok) cfg_fail(path, "unknown key '" + item.key() + "'");
    }
}

double as_num(const njson& v, const std::string& path) {
    if (!v.is_number()) cfg_fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) cfg_fail(path, "value must be finite");
    return x;
}

long long as_int(const njson& v, const std::string& path) {
    if (!v.is_number_integer()) cfg_fail(path, "expected an integer");
    return v.get<long long>();
}

std::string as_str(const njson& v, const std::string& path) {
    if (!v.is_string()) cfg_fail(path, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const njson& v, const std::string& path) {
    if (!v.is_boolean()) cfg_fail(path, "expected a boolean");
    return v.get<bool>();
}

bool plain_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            return false;
    return true;
}

Ineq ineq_from_string(const std::string& s, const std::string& path) {
    for (Ineq q : static_inequalities())
        if (s == ineq_name(q)) return q;
    if (s == ineq_name(Ineq::str1))
        cfg_fail(path, "STR1 is flow-level; it runs with every flow job");
    std::string names;
    for (Ineq q : static_inequalities())
        names += std::string(names.empty() ? "" : ", ") + ineq_name(q);
    cfg_fail(path, "unknown inequality '" + s + "' (known: " + names + ")");
}

DensitySpec parse_density(const njson& e, const std::string& path) {
    if (!e.is_object()) cfg_fail(path, "expected an object");
    check_keys(e, path, {"name", "family", "params", "dim"});
    if (!e.contains("name")) cfg_fail(path, "missing 'name'");
    if (!e.contains("family")) cfg_fail(path, "missing 'family'");

    DensitySpec s;
    s.name = as_str(e["name"], path + ".name");
    if (!plain_name(s.name))
        cfg_fail(path + ".name", "names use letters, digits, '_', '-' only");
    s.family = as_str(e["family"], path + ".family");
    if (e.contains("dim")) {
        const long long d = as_int(e["dim"], path + ".dim");
        if (d != 1 && d != 2) cfg_fail(path + ".dim", "dim must be 1 or 2");
        s.dim = static_cast<int>(d);
    }
    if (e.contains("params")) {
        const njson& ps = e["params"];
        if (!ps.is_object()) cfg_fail(path + ".params", "expected an object");
        for (const auto& item : ps.items())
            s.params[item.key()] = as_num(item.value(), path + ".params." + item.key());
    }

    // Construct once now so bad parameters fail here with the field path.
    try {
        if (s.analytic()) {
            (void)s.build();
        } else {
            if (s.dim != 2) (void)s.build_grid(GridSpec{});
            else cfg_fail(path + ".dim", "two_bump supports dim = 1 only");
        }
    } catch (const domain_error& ex) {
        cfg_fail(path, ex.what());
    }
    return s;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct PairRef {
    const DensitySpec* f = nullptr;
    const DensitySpec* g = nullptr;
};

std::vector<PairRef> verify_pairs_of(const ExperimentConfig& cfg) {
    std::vector<PairRef> out;
    if (cfg.all_pairs) {
        for (const DensitySpec& f : cfg.densities)
            for (const DensitySpec& g : cfg.densities)
                if (f.dim == g.dim) out.push_back({&f, &g});
    } else {
        for (const auto& pr : cfg.pairs)
            out.push_back({cfg.find(pr.first), cfg.find(pr.second)});
    }
    return out;
}

bool selected(const ExperimentConfig& cfg, Ineq q) {
    return std::find(cfg.inequalities.begin(), cfg.inequalities.end(), q) !=
           cfg.inequalities.end();
}

VerdictRow base_row(const PairRef& pr, Ineq q) {
    VerdictRow r;
    r.f = pr.f->name;
    r.g = pr.g->name;
    r.f_family = pr.f->describe();
    r.g_family = pr.g->describe();
    r.name = q;
    return r;
}

template <typename Fn>
void push_verdict(std::vector<VerdictRow>& rows, VerdictRow row, Fn&& eval) {
    try {
        row.v = eval();
    } catch (const precondition_error& e) {
        row.error_kind = RowError::precondition;
        row.error = e.what();
    } catch (const resolution_error& e) {
        row.error_kind = RowError::resolution;
        row.error = e.what();
    }
    rows.push_back(std::move(row));
}

/// Random interior nodes of a fresh discretization compared against the
/// closed form; catches sampling and indexing faults, not quadrature ones.
int spot_check(const AnalyticDensity& d, GridSpec spec, int n, std::mt19937_64& rng) {
    if (n <= 0) return 0;
    const GridDensity g = discretize(d, spec);
    std::uniform_int_distribution<std::size_t> dx(2, g.ax[0].count - 3);
    std::uniform_int_distribution<std::size_t> dy(
        2, g.dim == 2 ? g.ax[1].count - 3 : 2);
    int pass = 0;
    for (int k = 0; k < n; ++k) {
        const std::size_t ix = dx(rng);
        const std::size_t iy = g.dim == 2 ? dy(rng) : 0;
        const double ref = g.dim == 2
                               ? d.density(g.ax[0].x(ix), g.ax[1].x(iy))
                               : d.density(g.ax[0].x(ix));
        const double got = g.at(ix, iy);
        // The grid is renormalized to unit Simpson mass, so the ratio to the
        // closed form floats by the quadrature defect; 1e-6 still convicts
        // any indexing or sampling slip.
        if (ref < 1e-300 || std::fabs(got / ref - 1.0) <= 1e-6) ++pass;
    }
    return pass;
}

void judge_trace(FlowRow& row) {
    const std::vector<double>& L = row.trace.lambda;
    const std::vector<double>& E = row.trace.lambda_err;
    const std::size_t m = L.size();

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < m; ++i)
        worst = std::max(worst, (L[i + 1] - L[i]) - (E[i] + E[i + 1]));
    row.worst_increase = worst;
    row.monotone = worst <= 0.0;

    double mind2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < m; ++i)
        mind2 = std::min(mind2, row.trace.d2lambda[i]);
    if (m < 3) mind2 = 0.0;
    row.min_second_diff = mind2;
    row.convex = mind2 >= -kConvexityTol;

    bool above = true;
    for (std::size_t i = 0; i < m; ++i)
        if (L[i] - row.trace.limit + E[i] < -1e-12) above = false;
    row.above_limit = above;
    row.limit_gap = std::fabs(L.back() - row.trace.limit);
}

const char* error_kind_name(RowError k) {
    return k == RowError::precondition ? "precondition" : "resolution";
}

ojson config_to_ojson(const ExperimentConfig& cfg) {
    ojson c;
    c["densities"] = ojson::array();
    for (const DensitySpec& d : cfg.densities) {
        ojson e;
        e["name"] = d.name;
        e["family"] = d.family;
        e["params"] = ojson::object();
        for (const auto& kv : d.params) e["params"][kv.first] = kv.second;
        e["dim"] = d.dim;
        c["densities"].push_back(std::move(e));
    }
    c["grid"] = {{"spacing", cfg.grid.spacing},
                 {"half_width_std", cfg.grid.half_width_std},
                 {"quantile", cfg.grid.quantile}};
    ojson v;
    v["inequalities"] = ojson::array();
    for (Ineq q : cfg.inequalities) v["inequalities"].push_back(ineq_name(q));
    if (cfg.all_pairs) {
        v["pairs"] = "all";
    } else {
        v["pairs"] = ojson::array();
        for (const auto& pr : cfg.pairs)
            v["pairs"].push_back({pr.first, pr.second});
    }
    v["weights"] = ojson::array();
    for (const auto& w : cfg.weights) v["weights"].push_back({w.first, w.second});
    c["verify"] = std::move(v);
    c["flow"] = ojson::array();
    for (const FlowJob& job : cfg.flows) {
        ojson e;
        e["f"] = job.f;
        e["g"] = job.g;
        e["kappas"] = job.kappas;
        e["optimal_kappa"] = job.optimal_kappa;
        e["horizon"] = job.horizon;
        e["per_octave"] = job.per_octave;
        c["flow"].push_back(std::move(e));
    }
    c["spot_checks"] = cfg.spot_checks;
    c["seed"] = cfg.seed;
    return c;
}

ojson verdict_to_ojson(const InequalityVerdict& v) {
    ojson o;
    o["name"] = ineq_name(v.name);
    o["lhs"] = v.lhs;
    o["rhs"] = v.rhs;
    o["slack"] = v.slack;
    o["rel_slack"] = v.rel_slack;
    o["noise"] = v.noise;
    o["holds"] = v.holds;
    o["near_equality"] = v.near_equality;
    return o;
}

ojson verdict_row_to_ojson(const VerdictRow& row) {
    ojson o;
    if (row.error_kind == RowError::none) {
        o = verdict_to_ojson(row.v);
    } else {
        o["name"] = ineq_name(row.name);
    }
    ojson in;
    in["f"] = row.f;
    in["g"] = row.g;
    in["f_family"] = row.f_family;
    in["g_family"] = row.g_family;
    if (row.weighted) {
        in["a"] = row.a;
        in["b"] = row.b;
    }
    o["inputs"] = std::move(in);
    if (row.error_kind != RowError::none) {
        o["error"] = row.error;
        o["error_kind"] = error_kind_name(row.error_kind);
    }
    return o;
}

ojson functional_row_to_ojson(const FunctionalRow& row) {
    ojson o;
    o["density"] = row.density;
    o["family"] = row.family;
    o["dim"] = row.dim;
    if (row.error_kind != RowError::none) {
        o["error"] = row.error;
        o["error_kind"] = error_kind_name(row.error_kind);
        return o;
    }
    const FunctionalReport& r = row.report;
    o["entropy"] = r.entropy;
    o["entropy_err"] = r.err_entropy;
    o["fisher"] = r.fisher;
    o["fisher_err"] = r.err_fisher;
    o["fisher_finite"] = r.fisher_is_finite;
    o["fisher_second"] = r.fisher_second;
    o["fisher_second_err"] = r.err_fisher_second;
    o["fisher_second_finite"] = r.fisher_second_is_finite;
    o["entropy_power"] = r.entropy_power;
    o["entropy_power_err"] = r.err_entropy_power;
    o["points"] = r.points;
    o["spacing"] = r.spacing;
    o["spot_checks"] = {{"passed", row.spot_passed}, {"total", row.spot_total}};
    return o;
}

ojson flow_row_to_ojson(const FlowRow& row) {
    ojson o;
    o["f"] = row.f;
    o["g"] = row.g;
    o["kappa"] = row.kappa;
    o["kappa_is_optimal"] = row.kappa_is_optimal;
    o["horizon"] = row.horizon;
    if (row.error_kind != RowError::none) {
        o["error"] = row.error;
        o["error_kind"] = error_kind_name(row.error_kind);
        return o;
    }
    o["limit"] = row.trace.limit;
    o["lambda_final"] = row.trace.lambda.back();
    o["limit_gap"] = row.limit_gap;
    o["monotone"] = row.monotone;
    o["worst_increase"] = row.worst_increase;
    o["convex"] = row.convex;
    o["min_second_diff"] = row.min_second_diff;
    o["above_limit"] = row.above_limit;
    o["str1"] = verdict_to_ojson(row.str1);
    ojson tr;
    tr["t"] = row.trace.times;
    tr["lambda"] = row.trace.lambda;
    tr["lambda_err"] = row.trace.lambda_err;
    tr["dlambda"] = row.trace.dlambda;
    tr["d2lambda"] = row.trace.d2lambda;
    tr["analytic_d1"] = row.trace.analytic_d1;
    tr["analytic_d2"] = row.trace.analytic_d2;
    tr["d1_err"] = row.trace.d1_err;
    tr["d2_err"] = row.trace.d2_err;
    tr["P"] = row.trace.P_vals;
    tr["P_err"] = row.trace.P_err;
    tr["H_f"] = row.trace.H_f;
    tr["H_g"] = row.trace.H_g;
    tr["H_conv"] = row.trace.H_conv;
    tr["I_f"] = row.trace.I_f;
    tr["I_g"] = row.trace.I_g;
    tr["I_conv"] = row.trace.I_conv;
    tr["J_f"] = row.trace.J_f;
    tr["J_g"] = row.trace.J_g;
    tr["J_conv"] = row.trace.J_conv;
    o["trace"] = std::move(tr);
    return o;
}

ojson epi_row_to_ojson(const EpiRow& row) {
    ojson o;
    o["f"] = row.f;
    o["g"] = row.g;
    o["horizon"] = row.horizon;
    if (row.error_kind != RowError::none) {
        o["error"] = row.error;
        o["error_kind"] = error_kind_name(row.error_kind);
        return o;
    }
    const StrengthenedEpiReport& r = row.rep;
    o["kappa_bar"] = r.kappa_bar;
    o["P_kappa"] = r.P_kappa;
    o["P_kappa_err"] = r.P_kappa_err;
    o["tail_estimate"] = r.tail_estimate;
    o["horizon_ok"] = r.horizon_ok;
    if (!row.warning.empty()) o["warning"] = row.warning;
    o["R"] = r.R;
    o["R_err"] = r.R_err;
    o["epi_lhs"] = r.epi_lhs;
    o["epi_rhs_classic"] = r.epi_rhs_classic;
    o["epi_rhs_strengthened"] = r.epi_rhs_strengthened;
    o["sep_slack"] = r.sep_slack;
    o["sep_noise"] = r.sep_noise;
    o["sep_holds"] = r.sep_holds;
    return o;
}

} // namespace

AnalyticDensity DensitySpec::build() const {
    if (!analytic())
        throw contract_error("density '" + name + "' has no analytic form");
    return make_family(family_from_string(family), params, dim);
}

GridDensity DensitySpec::build_grid(GridSpec spec) const {
    if (analytic()) return discretize(build(), spec);
    auto value_or = [&](const char* key, double dflt) {
        const auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    for (const auto& kv : params)
        if (kv.first != "separation" && kv.first != "sigma" && kv.first != "spacing")
            throw domain_error("unknown parameter '" + kv.first + "' for two_bump");
    return make_two_bump(value_or("separation", 3.0), value_or("sigma", 0.25),
                         value_or("spacing", 0.01));
}

std::string DensitySpec::describe() const {
    if (analytic()) return build().describe();
    // Echo the effective values, defaults included, so the report is
    // self-describing.
    auto value_or = [&](const char* key, double dflt) {
        const auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    return "two_bump(separation=" + fmt_short(value_or("separation", 3.0)) +
           ",sigma=" + fmt_short(value_or("sigma", 0.25)) +
           ",spacing=" + fmt_short(value_or("spacing", 0.01)) + ")";
}

const DensitySpec* ExperimentConfig::find(const std::string& name) const {
    for (const DensitySpec& d : densities)
        if (d.name == name) return &d;
    return nullptr;
}

ExperimentConfig config_from_json_text(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::parse_error& e) {
        throw domain_error(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw domain_error("config: top level must be an object");
    check_keys(j, "top level", {"densities", "grid", "verify", "flow",
                                "spot_checks", "seed"});

    ExperimentConfig cfg;
    cfg.inequalities = static_inequalities();
    cfg.weights = {{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}, {1.0, 5.0}};

    if (j.contains("densities")) {
        const njson& ds = j["densities"];
        if (!ds.is_array()) cfg_fail("densities", "expected an array");
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const std::string path = "densities[" + std::to_string(i) + "]";
            DensitySpec s = parse_density(ds[i], path);
            if (cfg.find(s.name) != nullptr)
                cfg_fail(path + ".name", "duplicate density name '" + s.name + "'");
            cfg.densities.push_back(std::move(s));
        }
    }

    if (j.contains("grid")) {
        const njson& gr = j["grid"];
        if (!gr.is_object()) cfg_fail("grid", "expected an object");
        check_keys(gr, "grid", {"spacing", "half_width_std", "quantile"});
        if (gr.contains("spacing")) {
            cfg.grid.spacing = as_num(gr["spacing"], "grid.spacing");
            if (cfg.grid.spacing < 0.0)
                cfg_fail("grid.spacing", "spacing must be >= 0 (0 = default)");
        }
        if (gr.contains("half_width_std")) {
            cfg.grid.half_width_std = as_num(gr["half_width_std"], "grid.half_width_std");
            if (!(cfg.grid.half_width_std > 0.0))
                cfg_fail("grid.half_width_std", "must be positive");
        }
        if (gr.contains("quantile")) {
            cfg.grid.quantile = as_num(gr["quantile"], "grid.quantile");
            if (!(cfg.grid.quantile > 0.0) || cfg.grid.quantile > 0.1)
                cfg_fail("grid.quantile", "must lie in (0, 0.1]");
        }
    }

    if (j.contains("verify")) {
        const njson& v = j["verify"];
        if (!v.is_object()) cfg_fail("verify", "expected an object");
        check_keys(v, "verify", {"inequalities", "pairs", "weights"});
        if (v.contains("inequalities") && v["inequalities"] != njson("all")) {
            const njson& qs = v["inequalities"];
            if (!qs.is_array()) cfg_fail("verify.inequalities", "expected \"all\" or an array");
            cfg.inequalities.clear();
            for (std::size_t i = 0; i < qs.size(); ++i) {
                const std::string path = "verify.inequalities[" + std::to_string(i) + "]";
                cfg.inequalities.push_back(ineq_from_string(as_str(qs[i], path), path));
            }
        }
        if (v.contains("pairs") && v["pairs"] != njson("all")) {
            const njson& ps = v["pairs"];
            if (!ps.is_array()) cfg_fail("verify.pairs", "expected \"all\" or an array");
            cfg.all_pairs = false;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const std::string path = "verify.pairs[" + std::to_string(i) + "]";
                const njson& pr = ps[i];
                if (!pr.is_array() || pr.size() != 2)
                    cfg_fail(path, "expected [f, g] density names");
                const std::string fn = as_str(pr[0], path + "[0]");
                const std::string gn = as_str(pr[1], path + "[1]");
                const DensitySpec* fs = cfg.find(fn);
                const DensitySpec* gs = cfg.find(gn);
                if (fs == nullptr) cfg_fail(path + "[0]", "unknown density '" + fn + "'");
                if (gs == nullptr) cfg_fail(path + "[1]", "unknown density '" + gn + "'");
                if (fs->dim != gs->dim)
                    cfg_fail(path, "paired densities must share a dimension");
                cfg.pairs.emplace_back(fn, gn);
            }
        }
        if (v.contains("weights")) {
            const njson& ws = v["weights"];
            if (!ws.is_array()) cfg_fail("verify.weights", "expected an array");
            cfg.weights.clear();
            for (std::size_t i = 0; i < ws.size(); ++i) {
                const std::string path = "verify.weights[" + std::to_string(i) + "]";
                const njson& w = ws[i];
                if (!w.is_array() || w.size() != 2) cfg_fail(path, "expected [a, b]");
                const double a = as_num(w[0], path + "[0]");
                const double b = as_num(w[1], path + "[1]");
                if (!(a > 0.0) || !(b > 0.0)) cfg_fail(path, "weights must be positive");
                cfg.weights.emplace_back(a, b);
            }
            if (cfg.weights.empty()) cfg_fail("verify.weights", "needs at least one entry");
        }
    }

    if (j.contains("flow")) {
        const njson& fl = j["flow"];
        if (!fl.is_array()) cfg_fail("flow", "expected an array");
        for (std::size_t i = 0; i < fl.size(); ++i) {
            const std::string path = "flow[" + std::to_string(i) + "]";
            const njson& e = fl[i];
            if (!e.is_object()) cfg_fail(path, "expected an object");
            check_keys(e, path, {"f", "g", "kappas", "optimal_kappa", "horizon",
                                 "per_octave"});
            FlowJob job;
            if (!e.contains("f") || !e.contains("g"))
                cfg_fail(path, "missing 'f' or 'g'");
            job.f = as_str(e["f"], path + ".f");
            job.g = as_str(e["g"], path + ".g");
            const DensitySpec* fs = cfg.find(job.f);
            const DensitySpec* gs = cfg.find(job.g);
            if (fs == nullptr) cfg_fail(path + ".f", "unknown density '" + job.f + "'");
            if (gs == nullptr) cfg_fail(path + ".g", "unknown density '" + job.g + "'");
            if (!fs->analytic() || !gs->analytic())
                cfg_fail(path, "flow jobs need analytic densities");
            if (fs->dim != gs->dim) cfg_fail(path, "flow pair must share a dimension");
            if (e.contains("kappas")) {
                const njson& ks = e["kappas"];
                if (!ks.is_array()) cfg_fail(path + ".kappas", "expected an array");
                for (std::size_t k = 0; k < ks.size(); ++k) {
                    const std::string kp = path + ".kappas[" + std::to_string(k) + "]";
                    const double kv = as_num(ks[k], kp);
                    if (!(kv > 0.0) || !(kv < 1.0))
                        cfg_fail(kp, "kappa must lie in (0, 1)");
                    job.kappas.push_back(kv);
                }
            }
            if (e.contains("optimal_kappa"))
                job.optimal_kappa = as_bool(e["optimal_kappa"], path + ".optimal_kappa");
            if (job.kappas.empty() && !job.optimal_kappa)
                cfg_fail(path, "needs kappas or optimal_kappa");
            if (e.contains("horizon")) {
                job.horizon = as_num(e["horizon"], path + ".horizon");
                if (!(job.horizon > 0.0)) cfg_fail(path + ".horizon", "must be positive");
            }
            if (e.contains("per_octave")) {
                const long long po = as_int(e["per_octave"], path + ".per_octave");
                if (po < 1 || po > 16)
                    cfg_fail(path + ".per_octave", "must lie in [1, 16]");
                job.per_octave = static_cast<int>(po);
            }
            cfg.flows.push_back(std::move(job));
        }
    }

    if (j.contains("spot_checks")) {
        const long long n = as_int(j["spot_checks"], "spot_checks");
        if (n < 0 || n > 100000) cfg_fail("spot_checks", "must lie in [0, 100000]");
        cfg.spot_checks = static_cast<int>(n);
    }
    if (j.contains("seed")) {
        const njson& s = j["seed"];
        if (!s.is_number_integer() || s.get<long long>() < 0)
            cfg_fail("seed", "expected a nonnegative integer");
        cfg.seed = s.get<unsigned long long>();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw domain_error("config: cannot read file '" + path + "'");
    std::ostringstream body;
    body << in.rdbuf();
    return config_from_json_text(body.str());
}

void run_functionals(const ExperimentConfig& cfg, RunReport& out) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(cfg.seed);
    for (const DensitySpec& s : cfg.densities) {
        FunctionalRow row;
        row.density = s.name;
        row.family = s.describe();
        row.dim = s.dim;
        try {
            if (s.analytic()) {
                const AnalyticDensity d = s.build();
                row.report = functionals_analytic(d, cfg.grid);
                row.spot_total = cfg.spot_checks;
                row.spot_passed = spot_check(d, cfg.grid, cfg.spot_checks, rng);
            } else {
                row.report = functionals_grid(s.build_grid(cfg.grid));
            }
        } catch (const precondition_error& e) {
            row.error_kind = RowError::precondition;
            row.error = e.what();
        } catch (const resolution_error& e) {
            row.error_kind = RowError::resolution;
            row.error = e.what();
        }
        out.functionals.push_back(std::move(row));
    }
    out.wall_functionals = seconds_since(t0);
}

void run_verify(const ExperimentConfig& cfg, RunReport& out) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const PairRef& pr : verify_pairs_of(cfg)) {
        PairAnalysis p;
        RowError kind = RowError::none;
        std::string fail;
        try {
            if (pr.f->analytic() && pr.g->analytic())
                p = analyze_pair(pr.f->build(), pr.g->build(), cfg.grid);
            else
                p = analyze_pair(pr.f->build_grid(cfg.grid),
                                 pr.g->build_grid(cfg.grid));
        } catch (const precondition_error& e) {
            kind = RowError::precondition;
            fail = e.what();
        } catch (const resolution_error& e) {
            kind = RowError::resolution;
            fail = e.what();
        }

        const bool refinements_apply = pr.f->dim == 1;
        if (kind != RowError::none) {
            // The pair itself could not be analyzed: one error row per
            // selected inequality keeps the failure visible without noise.
            for (Ineq q : cfg.inequalities) {
                if (is_refinement(q) && !refinements_apply) continue;
                VerdictRow row = base_row(pr, q);
                row.error_kind = kind;
                row.error = fail;
                out.verdicts.push_back(std::move(row));
            }
            continue;
        }

        if (selected(cfg, Ineq::ine_main)) {
            for (const auto& w : cfg.weights) {
                const double a = w.first, b = w.second;
                VerdictRow row = base_row(pr, Ineq::ine_main);
                row.weighted = true;
                row.a = a;
                row.b = b;
                push_verdict(out.verdicts, std::move(row),
                             [&] { return verify_ine_main(p, a, b); });
            }
        }
        if (selected(cfg, Ineq::sharp2))
            push_verdict(out.verdicts, base_row(pr, Ineq::sharp2),
                         [&] { return verify_sharp2(p); });
        if (selected(cfg, Ineq::epi))
            push_verdict(out.verdicts, base_row(pr, Ineq::epi),
                         [&] { return verify_epi(p); });
        if (selected(cfg, Ineq::blachman_stam))
            push_verdict(out.verdicts, base_row(pr, Ineq::blachman_stam),
                         [&] { return verify_blachman_stam(p); });
        if (selected(cfg, Ineq::j_geq_i2))
            push_verdict(out.verdicts, base_row(pr, Ineq::j_geq_i2),
                         [&] { return verify_j_geq_i2(p); });
        if (selected(cfg, Ineq::cross_bound))
            push_verdict(out.verdicts, base_row(pr, Ineq::cross_bound),
                         [&] { return verify_cross_bound(p); });
        if (selected(cfg, Ineq::mean1))
            push_verdict(out.verdicts, base_row(pr, Ineq::mean1),
                         [&] { return verify_mean1(p); });

        const bool want_refinement = selected(cfg, Ineq::new1) ||
                                     selected(cfg, Ineq::new11) ||
                                     selected(cfg, Ineq::ex1);
        if (refinements_apply && want_refinement) {
            for (const auto& w : cfg.weights) {
                const double a = w.first, b = w.second;
                auto emit = [&](Ineq q, const InequalityVerdict* v, RowError k,
                                const std::string& msg) {
                    if (!selected(cfg, q)) return;
                    VerdictRow row = base_row(pr, q);
                    row.weighted = true;
                    row.a = a;
                    row.b = b;
                    if (v != nullptr) row.v = *v;
                    row.error_kind = k;
                    row.error = msg;
                    out.verdicts.push_back(std::move(row));
                };
                try {
                    const RefinementVerdicts rv = verify_new1_new11_ex1(p, a, b);
                    emit(Ineq::new1, &rv.new1, RowError::none, "");
                    emit(Ineq::new11, &rv.new11, RowError::none, "");
                    emit(Ineq::ex1, &rv.ex1, RowError::none, "");
                } catch (const precondition_error& e) {
                    emit(Ineq::new1, nullptr, RowError::precondition, e.what());
                    emit(Ineq::new11, nullptr, RowError::precondition, e.what());
                    emit(Ineq::ex1, nullptr, RowError::precondition, e.what());
                } catch (const resolution_error& e) {
                    emit(Ineq::new1, nullptr, RowError::resolution, e.what());
                    emit(Ineq::new11, nullptr, RowError::resolution, e.what());
                    emit(Ineq::ex1, nullptr, RowError::resolution, e.what());
                }
            }
        }
    }
    out.wall_verify = seconds_since(t0);
}

void run_flow(const ExperimentConfig& cfg, RunReport& out) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const FlowJob& job : cfg.flows) {
        std::vector<std::pair<double, bool>> ks;
        AnalyticDensity f, g;
        RowError kind = RowError::none;
        std::string fail;
        try {
            f = cfg.find(job.f)->build();
            g = cfg.find(job.g)->build();
            for (double k : job.kappas) ks.emplace_back(k, false);
            if (job.optimal_kappa)
                ks.emplace_back(optimal_kappa(f, g, cfg.grid), true);
        } catch (const precondition_error& e) {
            kind = RowError::precondition;
            fail = e.what();
        } catch (const resolution_error& e) {
            kind = RowError::resolution;
            fail = e.what();
        }
        if (kind != RowError::none) {
            FlowRow row;
            row.f = job.f;
            row.g = job.g;
            row.horizon = job.horizon;
            row.error_kind = kind;
            row.error = fail;
            out.flows.push_back(std::move(row));
            EpiRow er;
            er.f = job.f;
            er.g = job.g;
            er.horizon = job.horizon;
            er.error_kind = kind;
            er.error = fail;
            out.epis.push_back(std::move(er));
            continue;
        }

        const std::vector<double> mesh = flow_mesh(job.horizon, job.per_octave);
        for (const auto& k : ks) {
            FlowRow row;
            row.f = job.f;
            row.g = job.g;
            row.kappa = k.first;
            row.kappa_is_optimal = k.second;
            row.horizon = job.horizon;
            try {
                row.trace = lambda_trace(f, g, k.first, mesh, cfg.grid);
                judge_trace(row);
                row.str1 = verify_str1(f, g, k.first, 0.0, job.horizon, cfg.grid);
            } catch (const precondition_error& e) {
                row.error_kind = RowError::precondition;
                row.error = e.what();
            } catch (const resolution_error& e) {
                row.error_kind = RowError::resolution;
                row.error = e.what();
            }
            out.flows.push_back(std::move(row));
        }

        EpiRow er;
        er.f = job.f;
        er.g = job.g;
        er.horizon = job.horizon;
        try {
            er.rep = strengthened_epi(f, g, job.horizon, {}, cfg.grid);
            if (!er.rep.horizon_ok)
                er.warning = "partial deficit: the tail estimate exceeds the "
                             "threshold at this horizon; the accumulated value "
                             "is a lower bound and the bound direction is safe";
        } catch (const precondition_error& e) {
            er.error_kind = RowError::precondition;
            er.error = e.what();
        } catch (const resolution_error& e) {
            er.error_kind = RowError::resolution;
            er.error = e.what();
        }
        out.epis.push_back(std::move(er));
    }
    out.wall_flow = seconds_since(t0);
}

RunReport run_all(const ExperimentConfig& cfg) {
    RunReport r;
    r.config = cfg;
    run_functionals(cfg, r);
    run_verify(cfg, r);
    run_flow(cfg, r);
    return r;
}

bool any_violation(const RunReport& r) {
    for (const VerdictRow& row : r.verdicts)
        if (row.error_kind == RowError::none && !row.v.holds) return true;
    for (const FlowRow& row : r.flows)
        if (row.error_kind == RowError::none &&
            (!row.monotone || !row.convex || !row.above_limit || !row.str1.holds))
            return true;
    for (const EpiRow& row : r.epis)
        if (row.error_kind == RowError::none && !row.rep.sep_holds) return true;
    return false;
}

bool any_resolution_failure(const RunReport& r) {
    for (const FunctionalRow& row : r.functionals)
        if (row.error_kind == RowError::resolution) return true;
    for (const VerdictRow& row : r.verdicts)
        if (row.error_kind == RowError::resolution) return true;
    for (const FlowRow& row : r.flows)
        if (row.error_kind == RowError::resolution) return true;
    for (const EpiRow& row : r.epis)
        if (row.error_kind == RowError::resolution) return true;
    return false;
}

int exit_code(const RunReport& r) {
    if (any_violation(r)) return 1;
    if (any_resolution_failure(r)) return 3;
    return 0;
}

std::string report_json(const RunReport& r) {
    ojson j;
    j["version"] = r.version;
    j["config"] = config_to_ojson(r.config);
    j["functionals"] = ojson::array();
    for (const FunctionalRow& row : r.functionals)
        j["functionals"].push_back(functional_row_to_ojson(row));
    j["verdicts"] = ojson::array();
    for (const VerdictRow& row : r.verdicts)
        j["verdicts"].push_back(verdict_row_to_ojson(row));
    j["flows"] = ojson::array();
    for (const FlowRow& row : r.flows)
        j["flows"].push_back(flow_row_to_ojson(row));
    j["strengthened_epi"] = ojson::array();
    for (const EpiRow& row : r.epis)
        j["strengthened_epi"].push_back(epi_row_to_ojson(row));
    return j.dump(2) + "\n";
}

std::string metadata_json(const RunReport& r) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    ojson j;
    j["generated_at"] = stamp;
    j["toolkit_version"] = r.version;
    j["wall_clock_seconds"] = {
        {"functionals", r.wall_functionals},
        {"verify", r.wall_verify},
        {"flow", r.wall_flow},
        {"total", r.wall_functionals + r.wall_verify + r.wall_flow},
    };
    j["outcome"] = {
        {"violation", any_violation(r)},
        {"resolution_failure", any_resolution_failure(r)},
        {"exit_code", exit_code(r)},
    };
    return j.dump(2) + "\n";
}

std::string verdicts_csv(const RunReport& r) {
    std::string s = "name,f,g,a,b,lhs,rhs,slack,rel_slack,noise,holds,"
                    "near_equality,error\n";
    for (const VerdictRow& row : r.verdicts) {
        s += ineq_name(row.name);
        s += "," + csv_field(row.f) + "," + csv_field(row.g) + ",";
        if (row.weighted) s += fmt(row.a) + "," + fmt(row.b);
        else s += ",";
        if (row.error_kind == RowError::none) {
            s += "," + fmt(row.v.lhs) + "," + fmt(row.v.rhs) + "," +
                 fmt(row.v.slack) + "," + fmt(row.v.rel_slack) + "," +
                 fmt(row.v.noise) + "," + (row.v.holds ? "true" : "false") +
                 "," + (row.v.near_equality ? "true" : "false") + ",";
        } else {
            s += ",,,,,,,," + csv_field(row.error);
        }
        s += "\n";
    }
    return s;
}

std::string functionals_csv(const RunReport& r) {
    std::string s = "density,family,dim,entropy,entropy_err,fisher,fisher_err,"
                    "fisher_finite,fisher_second,fisher_second_err,"
                    "fisher_second_finite,entropy_power,entropy_power_err,"
                    "points,spacing,spot_passed,spot_total,error\n";
    for (const FunctionalRow& row : r.functionals) {
        s += csv_field(row.density) + "," + csv_field(row.family) + "," +
             std::to_string(row.dim) + ",";
        if (row.error_kind == RowError::none) {
            const FunctionalReport& f = row.report;
            s += fmt(f.entropy) + "," + fmt(f.err_entropy) + "," +
                 fmt(f.fisher) + "," + fmt(f.err_fisher) + "," +
                 (f.fisher_is_finite ? "true" : "false") + "," +
                 fmt(f.fisher_second) + "," + fmt(f.err_fisher_second) + "," +
                 (f.fisher_second_is_finite ? "true" : "false") + "," +
                 fmt(f.entropy_power) + "," + fmt(f.err_entropy_power) + "," +
                 std::to_string(f.points) + "," + fmt(f.spacing) + "," +
                 std::to_string(row.spot_passed) + "," +
                 std::to_string(row.spot_total) + ",";
        } else {
            s += ",,,,,,,,,,,,,," + csv_field(row.error);
        }
        s += "\n";
    }
    return s;
}

std::string trace_csv(const FlowTrace& t) {
    std::string s = "t,lambda,dlambda,d2lambda,analytic_d1,analytic_d2,P,"
                    "H_f,H_g,H_conv,I_f,I_g,I_conv,J_f,J_g,J_conv\n";
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        s += fmt(t.times[i]) + "," + fmt(t.lambda[i]) + "," +
             fmt(t.dlambda[i]) + "," + fmt(t.d2lambda[i]) + "," +
             fmt(t.analytic_d1[i]) + "," + fmt(t.analytic_d2[i]) + "," +
             fmt(t.P_vals[i]) + "," + fmt(t.H_f[i]) + "," + fmt(t.H_g[i]) +
             "," + fmt(t.H_conv[i]) + "," + fmt(t.I_f[i]) + "," +
             fmt(t.I_g[i]) + "," + fmt(t.I_conv[i]) + "," + fmt(t.J_f[i]) +
             "," + fmt(t.J_g[i]) + "," + fmt(t.J_conv[i]) + "\n";
    }
    return s;
}

std::string grid_csv(const GridDensity& g, double t) {
    std::string s;
    if (t >= 0.0) s += "# t=" + fmt(t) + "\n";
    if (g.dim == 2) {
        s += "x,y,value\n";
        for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
            for (std::size_t iy = 0; iy < g.ax[1].count; ++iy)
                s += fmt(g.ax[0].x(ix)) + "," + fmt(g.ax[1].x(iy)) + "," +
                     fmt(g.at(ix, iy)) + "\n";
    } else {
        s += "x,value\n";
        for (std::size_t ix = 0; ix < g.ax[0].count; ++ix)
            s += fmt(g.ax[0].x(ix)) + "," + fmt(g.at(ix)) + "\n";
    }
    return s;
}

std::vector<std::string> write_outputs(const RunReport& r, const std::string& dir,
                                       const std::string& format) {
    if (format != "json" && format != "csv")
        throw domain_error("format must be 'json' or 'csv'");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw domain_error("cannot create output directory '" + dir + "'");

    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& body) {
        const std::string path = dir + "/" + name;
        std::ofstream o(path, std::ios::binary);
        if (!o) throw domain_error("cannot write '" + path + "'");
        o << body;
        written.push_back(name);
    };

    put("report.json", report_json(r));
    put("meta.json", metadata_json(r));
    if (format == "csv") {
        if (!r.functionals.empty()) put("functionals.csv", functionals_csv(r));
        if (!r.verdicts.empty()) put("verdicts.csv", verdicts_csv(r));
        for (const FlowRow& row : r.flows) {
            if (row.error_kind != RowError::none) continue;
            put("trace_" + row.f + "__" + row.g + "__k" + fmt_short(row.kappa) +
                    ".csv",
                trace_csv(row.trace));
        }
    }
    return written;
}

std::string summarize(const RunReport& r) {
    std::ostringstream os;
    char buf[160];
    if (!r.functionals.empty()) {
        int errs = 0;
        for (const FunctionalRow& row : r.functionals)
            if (row.error_kind != RowError::none) ++errs;
        std::snprintf(buf, sizeof buf,
                      "functionals: %zu densities, %d reported errors\n",
                      r.functionals.size(), errs);
        os << buf;
    }
    if (!r.verdicts.empty()) {
        int violations = 0, near = 0, errs = 0;
        for (const VerdictRow& row : r.verdicts) {
            if (row.error_kind != RowError::none) { ++errs; continue; }
            if (!row.v.holds) ++violations;
            if (row.v.near_equality) ++near;
        }
        std::snprintf(buf, sizeof buf,
                      "verify: %zu verdicts, %d violations, %d near equality, "
                      "%d reported errors\n",
                      r.verdicts.size(), violations, near, errs);
        os << buf;
    }
    if (!r.flows.empty()) {
        int bad = 0, errs = 0;
        double worst_gap = 0.0;
        for (const FlowRow& row : r.flows) {
            if (row.error_kind != RowError::none) { ++errs; continue; }
            if (!row.monotone || !row.convex || !row.above_limit ||
                !row.str1.holds)
                ++bad;
            worst_gap = std::max(worst_gap, row.limit_gap);
        }
        std::snprintf(buf, sizeof buf,
                      "flow: %zu traces, %d invariant failures, worst limit "
                      "gap %.2e, %d reported errors\n",
                      r.flows.size(), bad, worst_gap, errs);
        os << buf;
    }
    if (!r.epis.empty()) {
        double rlo = std::numeric_limits<double>::infinity();
        double rhi = -std::numeric_limits<double>::infinity();
        int warn = 0, bad = 0, errs = 0;
        for (const EpiRow& row : r.epis) {
            if (row.error_kind != RowError::none) { ++errs; continue; }
            rlo = std::min(rlo, row.rep.R);
            rhi = std::max(rhi, row.rep.R);
            if (!row.warning.empty()) ++warn;
            if (!row.rep.sep_holds) ++bad;
        }
        if (rlo > rhi) { rlo = 0.0; rhi = 0.0; }
        std::snprintf(buf, sizeof buf,
                      "strengthened epi: %zu pairs, R in [%.8f, %.8f], %d "
                      "partial-deficit warnings, %d violations, %d reported "
                      "errors\n",
                      r.epis.size(), rlo, rhi, warn, bad, errs);
        os << buf;
    }
    return os.str();
}

} // namespace logconc
