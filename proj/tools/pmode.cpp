// pmode: audits, pseudomode sweeps and self-tests from the command line.
//
// Exit codes: 0 success (audit licensed), 2 construction refused, 1 error.

#include "pseudomode/io.hpp"
#include "pseudomode/selftest.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

using namespace pseudomode;

namespace {

struct Overrides {
    std::string config;
    std::string model;
    std::string model_file;
    int j = 0;
    std::vector<double> lambdas;
    int K = 0;
    double rho = 0.0;
    std::string out;
};

RunConfig assemble(const Overrides& o)
{
    RunConfig cfg = o.config.empty() ? RunConfig{} : load_config_file(o.config);
    if (!o.model.empty()) {
        cfg.model = ModelRef{};
        cfg.model.builtin = o.model;
    }
    if (!o.model_file.empty()) {
        cfg.model = ModelRef{};
        cfg.model.builtin.clear();
        cfg.model.file = o.model_file;
    }
    if (o.j > 0) cfg.model.params.j = o.j;
    if (!o.lambdas.empty()) cfg.lambdas = o.lambdas;
    if (o.K > 0) cfg.K = o.K;
    if (o.rho > 0) cfg.rho = o.rho;
    if (const char* env = std::getenv("PMODE_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!o.out.empty()) cfg.output_dir = o.out;
    cfg.validate();
    return cfg;
}

std::string lambda_tag(double l)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", l);
    return buf;
}

int cmd_audit(const Overrides& o)
{
    RunConfig cfg = assemble(o);
    ModelProblem m = resolve_model(cfg.model);
    AuditOutcome a = run_audit(m);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string path = (std::filesystem::path(cfg.output_dir) / "audit.json").string();
    write_text_file(path, audit_json(m, a));
    if (a.licensed()) {
        std::cout << m.label << ": conditions met, construction licensed (" << path << ")\n";
        return 0;
    }
    std::cout << m.label << ": " << to_string(a.refusal) << " (" << path << ")\n";
    return 2;
}

int cmd_run(const Overrides& o, bool force)
{
    RunConfig cfg = assemble(o);
    ModelProblem m = resolve_model(cfg.model);
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path dir(cfg.output_dir);
    auto sink = [&](double lam, const PhaseTrajectory& tr) {
        write_text_file((dir / ("phase_" + lambda_tag(lam) + ".csv")).string(), phase_csv(tr));
        if (cfg.verbosity > 0) std::cout << "  lambda " << lambda_tag(lam) << " done\n" << std::flush;
    };
    SweepResult res = violation_report(m, cfg, force, sink);
    write_text_file((dir / "report.csv").string(), report_csv(res.rows));
    write_text_file((dir / "summary.json").string(), summary_json(m, cfg, res));
    for (const auto& f : res.failures) std::cout << "  lambda " << lambda_tag(f.lambda) << ": " << f.message << "\n";
    std::cout << m.label << ": " << to_string(res.verdict);
    if (res.ratio_fit.valid) std::cout << " (ratio slope " << res.ratio_fit.slope << ", R^2 " << res.ratio_fit.r2 << ")";
    std::cout << "\n";
    if (res.verdict == Verdict::RefusedConditions || res.verdict == Verdict::RefusedNoSignChange) return 2;
    return 0;
}

int cmd_selftest()
{
    SelftestReport r = run_selftest(selftest_tol_scale());
    for (const auto& c : r.checks) {
        std::printf("%-4s %-44s value %.3e  tol %.3e", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.tol);
        if (!c.detail.empty()) std::printf("  %s", c.detail.c_str());
        std::printf("\n");
    }
    std::printf("%s\n", r.ok() ? "selftest passed" : "selftest FAILED");
    return r.ok() ? 0 : 1;
}

int cmd_models()
{
    std::cout << "mizohata  nx=1 ny=1 k=2  f = -i t eta^2\n"
                 "cpt       nx=1 ny=2 k=2  f = i(eta1 eta2 + t eta2^2)\n"
                 "cpt_gen   nx=1 ny=2 k=2  f = i(eta1 eta2 + t^(2j+1) eta2^2), F0 = i(2j^2+j) t^(2j-1) y1^2\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pseudomode construction and nonsolvability checks"};
    app.require_subcommand(1);
    Overrides o;
    bool force = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration");
        sub->add_option("--model", o.model, "builtin model name")->check(CLI::IsMember({"mizohata", "cpt", "cpt_gen"}));
        sub->add_option("--model-file", o.model_file, "JSON model definition")->check(CLI::ExistingFile);
        sub->add_option("--j", o.j, "cpt_gen parameter")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory");
    };
    CLI::App* audit = app.add_subcommand("audit", "check sign change and structural conditions");
    add_common(audit);
    CLI::App* run = app.add_subcommand("run", "full lambda sweep");
    add_common(run);
    run->add_option("--lambda", o.lambdas, "lambda values")->delimiter(',');
    run->add_option("--K", o.K, "phase truncation degree");
    run->add_option("--rho", o.rho, "exponent rho");
    run->add_flag("--force", force, "run even when the audit refuses");
    CLI::App* self = app.add_subcommand("selftest", "property suites");
    CLI::App* models = app.add_subcommand("models", "list builtin models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*audit) return cmd_audit(o);
        if (*run) return cmd_run(o, force);
        if (*self) return cmd_selftest();
        if (*models) return cmd_models();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
