#include "pseudomode/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pseudomode {

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Violation: return "VIOLATION";
    case Verdict::RefusedConditions: return "REFUSED_CONDITIONS";
    case Verdict::RefusedNoSignChange: return "REFUSED_NO_SIGN_CHANGE";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    }
    return "INCONCLUSIVE";
}

void RunConfig::validate() const
{
    if (lambdas.empty()) throw Error(ErrorKind::ConfigError, "lambdas must not be empty");
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 16.0)) throw Error(ErrorKind::ConfigError, "lambda values must be >= 16");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
            throw Error(ErrorKind::ConfigError, "lambda values must be strictly increasing");
    }
    if (!(rho > 0.0 && rho < 0.5)) throw Error(ErrorKind::ConfigError, "rho must lie in (0, 1/2)");
    if (K < 2 || K > 8) throw Error(ErrorKind::ConfigError, "K must lie in [2, 8]");
    if (M_a < 1) throw Error(ErrorKind::ConfigError, "M_a must be positive");
    if (L < 0) throw Error(ErrorKind::ConfigError, "L must be non-negative");
    if (grid.n_t < 16) throw Error(ErrorKind::ConfigError, "grid.n_t must be at least 16");
    if (!(aperture > 0.0 && aperture < M_PI / 2)) throw Error(ErrorKind::ConfigError, "aperture must lie in (0, pi/2)");
    if (!(cutoff.R_t > 0 && cutoff.R_x > 0 && cutoff.R_y > 0))
        throw Error(ErrorKind::ConfigError, "cutoff radii must be positive");
    if (!(im_w02_init > 0)) throw Error(ErrorKind::ConfigError, "im_w02_init must be positive");
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
    SlopeFit r;
    const size_t n = std::min(x.size(), y.size());
    if (n < 2) return r;
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) return r;
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) return r;
    r.valid = true;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    r.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
    return r;
}

AuditOutcome run_audit(const ModelProblem& model, const AuditOptions& opt)
{
    AuditOutcome out;
    try {
        out.sign = detect_sign_change(model, LinePoint::base(model), model.t_lo, model.t_hi);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoSignChange) throw;
        out.sign.found = false;
    }
    if (!out.sign.found) {
        out.refusal = Verdict::RefusedNoSignChange;
        return out;
    }
    out.audit = audit_conditions(model, AuditRegion::around(model), opt);
    out.audited = true;
    if (!out.audit.licensed()) out.refusal = Verdict::RefusedConditions;
    return out;
}

IntegrateOptions integrate_options(const RunConfig& cfg, double lambda)
{
    IntegrateOptions o;
    o.phase.K = cfg.K;
    o.phase.rho = cfg.rho;
    o.phase.lambda = lambda;
    o.phase.im_w02_init = cfg.im_w02_init;
    // chi reaches zero where lambda^{1-rho} Im w0 = 2 R_t; the gate has to reach that level
    o.gate.exit_level = 2.0 * cfg.cutoff.R_t * std::pow(lambda, cfg.rho);
    return o;
}

TransportOptions transport_options(const RunConfig& cfg)
{
    TransportOptions t;
    t.L = cfg.L;
    t.M_a = cfg.M_a;
    t.kappa = cfg.kappa_exp;
    t.cutoff = cfg.cutoff;
    return t;
}

NormReport run_lambda(const ModelProblem& model, const RunConfig& cfg, double lambda, PhaseTrajectory* traj_out)
{
    const auto start = std::chrono::steady_clock::now();
    PhaseTrajectory traj = integrate_phase(model, integrate_options(cfg, lambda));
    AmplitudeSet amp = solve_transport(traj, transport_options(cfg));
    FieldGrid u = synthesize(traj, amp, make_grid(traj, amp, cfg.grid));

    NormReport r;
    r.lambda = lambda;
    r.N = cfg.N;
    r.nu = cfg.nu;
    r.n = 1 + model.nx + model.ny;
    r.K = cfg.K;
    r.M_a = cfg.M_a;
    r.L = cfg.L;
    r.rho = cfg.rho;

    const double u0 = l2_norm(u);
    if (!(u0 > 0.0)) throw Error(ErrorKind::NonFinite, "synthesized field vanishes on the grid");
    r.u_minusN = sobolev_norm(u, -cfg.N);
    r.u_minusNn = sobolev_norm(u, -cfg.N - r.n);
    {
        FieldGrid pd = apply_direct(model, u);
        r.Pu_nu = sobolev_norm(pd, cfg.nu);
        r.residual_direct = l2_norm(pd) / u0;
    }
    {
        FieldGrid pe = apply_via_expansion(traj, amp, u);
        r.residual_expansion = l2_norm(pe) / u0;
    }
    {
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(1 + model.nx + model.ny);
        dir.segment(1, model.nx) = model.xi0;
        r.Au_zero = l2_norm(cone_cutoff_apply(u, dir, cfg.aperture));
    }
    r.ratio = NormReport::compose_ratio(r.Pu_nu, r.u_minusNn, r.Au_zero, r.u_minusN);
    r.min_im_w0 = traj.im_w0_min;
    r.t0_anchor = traj.t0_anchor;
    r.usable_lo = traj.usable[0];
    r.usable_hi = traj.usable[1];
    if (cfg.record_timing)
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (traj_out) *traj_out = std::move(traj);
    return r;
}

SweepResult violation_report(const ModelProblem& model, const RunConfig& cfg, bool force, const TrajectorySink& sink)
{
    cfg.validate();
    SweepResult res;
    AuditOutcome audit = run_audit(model);
    if (!audit.sign.found) {
        res.verdict = Verdict::RefusedNoSignChange;
        res.reason = "Im f does not change sign along the base line";
        return res;
    }
    if (!audit.licensed() && !force) {
        res.verdict = Verdict::RefusedConditions;
        res.reason = "construction refused: conditions not met";
        return res;
    }

    std::vector<double> sorted = cfg.lambdas;
    std::sort(sorted.begin(), sorted.end());
    for (double lam : sorted) {
        try {
            PhaseTrajectory traj;
            NormReport r = run_lambda(model, cfg, lam, sink ? &traj : nullptr);
            res.rows.push_back(r);
            if (sink) sink(lam, traj);
        } catch (const Error& e) {
            res.failures.push_back({lam, to_string(e.kind()), e.what()});
        }
    }

    std::vector<double> x, ratio, u, Pu;
    for (const auto& r : res.rows) {
        x.push_back(r.lambda);
        ratio.push_back(r.ratio);
        u.push_back(r.u_minusN);
        Pu.push_back(r.Pu_nu);
    }
    res.ratio_fit = fit_loglog(x, ratio);
    res.u_fit = fit_loglog(x, u);
    res.Pu_fit = fit_loglog(x, Pu);

    if (!res.ratio_fit.valid) {
        res.verdict = Verdict::Inconclusive;
        res.reason = res.rows.size() < 2 ? "fewer than two completed lambda values, slope unavailable"
                                         : "slope fit failed";
    } else if (res.ratio_fit.slope <= cfg.slope_threshold && res.ratio_fit.r2 >= cfg.r2_min) {
        res.verdict = Verdict::Violation;
        res.reason = "ratio decays in lambda";
    } else {
        res.verdict = Verdict::Inconclusive;
        res.reason = "ratio slope or fit quality outside the violation thresholds";
    }
    if (!audit.licensed() && res.verdict != Verdict::Violation) {
        res.verdict = Verdict::RefusedConditions;
        res.reason = "conditions not met; forced run did not show a violation";
    }
    return res;
}

} // namespace pseudomode
