#include "logconc/errors.hpp"
#include "logconc/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

// Experiment driver.  Subcommands run one report fragment or all of them;
// every run writes report.json (deterministic) and meta.json (timestamps,
// wall clock) into --out, plus CSV tables when --format csv.
//
// Exit codes: 0 all checks pass, 1 a bound failed beyond its noise,
// 2 config or usage error, 3 a quantity could not be resolved on the grid.

namespace {

struct CliOptions {
    std::string config;
    std::string out = "out";
    std::string format = "json";
    double spacing = -1.0; // negative = keep the config value
    long long seed = -1;   // negative = keep the config value
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config, "experiment config file (JSON)")
        ->required();
    cmd->add_option("--out", opt.out, "output directory")
        ->capture_default_str();
    cmd->add_option("--format", opt.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    cmd->add_option("--spacing", opt.spacing,
                    "override grid spacing (0 = per-density default)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", opt.seed, "override the spot-check seed")
        ->check(CLI::NonNegativeNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"log-concave density toolkit: information functionals, "
                 "convolution inequalities, heat-flow experiments"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* c_fun = app.add_subcommand(
        "functionals", "entropy, Fisher information, J, entropy power");
    CLI::App* c_ver = app.add_subcommand(
        "verify", "convolution inequality verdicts over density pairs");
    CLI::App* c_flo = app.add_subcommand(
        "flow", "Lambda traces and the strengthened EPI along heat flows");
    CLI::App* c_rep = app.add_subcommand(
        "report", "all sections in one run");
    for (CLI::App* c : {c_fun, c_ver, c_flo, c_rep}) add_common(c, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 2;
    }

    try {
        logconc::ExperimentConfig cfg = logconc::load_config(opt.config);
        if (opt.spacing >= 0.0) cfg.grid.spacing = opt.spacing;
        if (opt.seed >= 0)
            cfg.seed = static_cast<unsigned long long>(opt.seed);

        logconc::RunReport rep;
        rep.config = cfg;
        if (c_fun->parsed()) {
            logconc::run_functionals(cfg, rep);
        } else if (c_ver->parsed()) {
            logconc::run_verify(cfg, rep);
        } else if (c_flo->parsed()) {
            logconc::run_flow(cfg, rep);
        } else {
            rep = logconc::run_all(cfg);
        }

        const std::vector<std::string> files =
            logconc::write_outputs(rep, opt.out, opt.format);
        std::fputs(logconc::summarize(rep).c_str(), stdout);
        std::printf("wrote %zu files to %s\n", files.size(), opt.out.c_str());

        const int code = logconc::exit_code(rep);
        if (code == 1)
            std::puts("outcome: violation beyond noise (exit 1)");
        else if (code == 3)
            std::puts("outcome: resolution failure (exit 3)");
        else
            std::puts("outcome: all checks passed (exit 0)");
        return code;
    } catch (const logconc::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const logconc::resolution_error& e) {
        std::fprintf(stderr, "resolution error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
