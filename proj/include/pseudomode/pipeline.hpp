#pragma once

#include "pseudomode/synth.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pseudomode {

struct ModelRef {
    std::string builtin = "mizohata"; // empty when the model comes from a file or inline object
    BuiltinParams params;
    std::string file;
    std::optional<ModelProblem> inline_model;
};

struct RunConfig {
    ModelRef model;
    std::vector<double> lambdas{64, 128, 256, 512};
    int K = 4;
    int M_a = 4;
    int L = 0;
    double rho = 0.1;
    double kappa_exp = -1.0; // negative: min(rho, 1/(2k))
    double N = 0.0;
    double nu = 0.0;
    GridSpec grid{512, 0, 0, 0.1, 0.2, 1e-8};
    CutoffParams cutoff{6.0, 1.0, 12.0};
    double im_w02_init = 0.25;
    double aperture = 0.5235987755982988; // pi/6
    double slope_threshold = -0.25;
    double r2_min = 0.9;
    unsigned long long seed = 7;
    std::string output_dir = "pmode_out";
    int verbosity = 1;
    bool record_timing = false;

    void validate() const;
};

struct NormReport {
    double lambda = 0.0;
    double u_minusN = 0.0;
    double Pu_nu = 0.0;
    double u_minusNn = 0.0;
    double Au_zero = 0.0;
    double ratio = 0.0;
    double residual_expansion = 0.0;
    double residual_direct = 0.0;
    double min_im_w0 = 0.0;
    double t0_anchor = 0.0;
    double usable_lo = 0.0;
    double usable_hi = 0.0;
    double wall_ms = 0.0;
    double N = 0.0, nu = 0.0, n = 0.0;
    int K = 4, M_a = 4, L = 0;
    double rho = 0.1;

    // Right side of the solvability estimate over its left side.
    static double compose_ratio(double Pu, double u_Nn, double Au, double u_N) { return (Pu + u_Nn + Au) / u_N; }
};

enum class Verdict { Violation, RefusedConditions, RefusedNoSignChange, Inconclusive };
const char* to_string(Verdict v);

struct SlopeFit {
    bool valid = false;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least-squares fit of log y against log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct AuditOutcome {
    SignChangeReport sign;
    ConditionAudit audit;
    bool audited = false;
    Verdict refusal = Verdict::Inconclusive; // meaningful when !licensed()
    bool licensed() const { return sign.found && audited && audit.licensed(); }
};

AuditOutcome run_audit(const ModelProblem& model, const AuditOptions& opt = {});

struct LambdaFailure {
    double lambda = 0.0;
    std::string kind;
    std::string message;
};

struct SweepResult {
    std::vector<NormReport> rows;
    std::vector<LambdaFailure> failures;
    SlopeFit ratio_fit;
    SlopeFit u_fit;
    SlopeFit Pu_fit;
    Verdict verdict = Verdict::Inconclusive;
    std::string reason;
};

IntegrateOptions integrate_options(const RunConfig& cfg, double lambda);
TransportOptions transport_options(const RunConfig& cfg);

/// conditions -> eikonal -> transport -> synth at one lambda.
NormReport run_lambda(const ModelProblem& model, const RunConfig& cfg, double lambda,
                      PhaseTrajectory* traj_out = nullptr);

using TrajectorySink = std::function<void(double lambda, const PhaseTrajectory&)>;

/// Sweep over cfg.lambdas. Without force the audit must license the construction.
SweepResult violation_report(const ModelProblem& model, const RunConfig& cfg, bool force,
                             const TrajectorySink& sink = {});

} // namespace pseudomode
