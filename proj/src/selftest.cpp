#include "pseudomode/selftest.hpp"

#include "pseudomode/io.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

namespace pseudomode {

bool SelftestReport::ok() const
{
    for (const auto& c : checks)
        if (!c.pass) return false;
    return !checks.empty();
}

double selftest_tol_scale()
{
    const char* s = std::getenv("PMODE_SELFTEST_TOL_SCALE");
    if (!s || !*s) return 1.0;
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || !std::isfinite(v) || v < 0) return 1.0;
    return v;
}

namespace {

struct Suite {
    double scale;
    std::vector<SelfCheck>& out;

    void check(const std::string& name, double value, double tol, const std::string& detail = {})
    {
        SelfCheck c{name, value, tol, std::isfinite(value) && value < tol * scale, detail};
        out.push_back(c);
    }

    template <class F>
    void guarded(const std::string& name, F&& body)
    {
        try {
            body();
        } catch (const std::exception& e) {
            out.push_back({name, NAN, 0.0, false, std::string("threw: ") + e.what()});
        }
    }
};

SymbolFunction random_poly(std::mt19937_64& rng, int nx, int ny)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> d(0, 2);
    std::vector<PolyTerm> terms;
    for (int i = 0; i < 6; ++i) {
        PolyTerm t;
        t.coeff = cd(u(rng), u(rng));
        t.tc = TCoef::pow(d(rng));
        t.e.resize(2 * nx + 2 * ny);
        for (auto& e : t.e) e = d(rng);
        terms.push_back(t);
    }
    return SymbolFunction::polynomial(nx, ny, terms);
}

SymbolPoint random_point(std::mt19937_64& rng, int nx, int ny, double r)
{
    std::uniform_real_distribution<double> u(-r, r);
    auto v = [&](int n) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = u(rng);
        return x;
    };
    return SymbolPoint(u(rng), v(nx), v(nx), v(ny), v(ny));
}

void symbols_suite(Suite& s, std::mt19937_64& rng)
{
    s.guarded("symbols.partial_identity", [&] {
        double worst = 0.0;
        for (const auto& name : {"mizohata", "cpt", "cpt_gen"}) {
            ModelProblem m = builtin_model(name);
            for (int i = 0; i < 16; ++i) {
                SymbolPoint p = random_point(rng, m.nx, m.ny, 2.0);
                cd a = m.f.eval(p), b = m.f.partial(Orders(m.nx, m.ny), p);
                worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
            }
        }
        s.check("symbols.partial_identity", worst, 1e-14);
    });
    s.guarded("symbols.mixed_partial_symmetry", [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            SymbolFunction f = random_poly(rng, 1, 2);
            SymbolFunction ab = f.derivative(Slot::Xi, 0).derivative(Slot::Eta, 1);
            SymbolFunction ba = f.derivative(Slot::Eta, 1).derivative(Slot::Xi, 0);
            SymbolPoint p = random_point(rng, 1, 2, 2.0);
            cd a = ab.eval(p), b = ba.eval(p);
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
        s.check("symbols.mixed_partial_symmetry", worst, 1e-12);
    });
    s.guarded("symbols.finite_difference_vs_exact", [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 6; ++trial) {
            SymbolFunction f = random_poly(rng, 1, 1);
            SymbolFunction g = SymbolFunction::numeric(1, 1, [f](const SymbolPoint& p) { return f.eval(p); });
            SymbolPoint p = random_point(rng, 1, 1, 2.0);
            for (int a = 0; a < 4; ++a)
                for (int b = a; b < 4; ++b) {
                    Orders o(1, 1);
                    o.e[a] += 1;
                    o.e[b] += 1;
                    cd ex = f.partial(o, p), fd = g.partial(o, p);
                    worst = std::max(worst, std::abs(ex - fd) / std::max(1.0, std::abs(ex)));
                }
        }
        s.check("symbols.finite_difference_vs_exact", worst, 1e-6);
    });
    s.guarded("symbols.extended_equals_reduced_for_degree_k", [&] {
        ModelProblem m = builtin_model("mizohata");
        SymbolFunction ps = SymbolFunction::zero(1, 1);
        double worst = 0.0;
        for (double lam : {1e2, 1e3, 1e4}) {
            SymbolPoint w = m.base_point(0.3);
            w.eta.setZero();
            JetPolynomial j = reduced_subprincipal(m.f, ps, m.k, w);
            Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.7);
            worst = std::max(worst, std::abs(extended_subprincipal(m.f, ps, m.k, w, eta, lam) - j.eval(eta)));
        }
        s.check("symbols.extended_equals_reduced_for_degree_k", worst, 1e-12);
    });
    s.guarded("symbols.diff_op_consistency", [&] {
        double worst = 0.0;
        for (const auto& name : {"mizohata", "cpt", "cpt_gen"}) worst = std::max(worst, diff_op_consistency(builtin_model(name)));
        s.check("symbols.diff_op_consistency", worst, 1e-6);
    });
}

void conditions_suite(Suite& s)
{
    s.guarded("conditions.adjoint_reverses_direction", [&] {
        ModelProblem m = builtin_model("mizohata");
        auto a = detect_sign_change(m, LinePoint::base(m), m.t_lo, m.t_hi);
        ModelProblem c = conjugate_flip(m);
        auto b = detect_sign_change(c, LinePoint::base(c), c.t_lo, c.t_hi);
        s.check("conditions.adjoint_reverses_direction", a.direction == b.direction ? 1.0 : 0.0, 0.5);
    });
    s.guarded("conditions.mizohata_crossing", [&] {
        ModelProblem m = builtin_model("mizohata");
        auto a = detect_sign_change(m, LinePoint::base(m), m.t_lo, m.t_hi);
        double bad = (a.found && a.direction == Direction::PlusToMinus && a.order_estimate == 1) ? 0.0 : 1.0;
        s.check("conditions.mizohata_crossing", std::max(bad, std::abs(a.t_cross)), 1e-6);
    });
    s.guarded("conditions.audit_verdicts", [&] {
        bool miz = run_audit(builtin_model("mizohata")).licensed();
        bool cpt = run_audit(builtin_model("cpt")).licensed();
        s.check("conditions.audit_verdicts", (miz && !cpt) ? 0.0 : 1.0, 0.5, "mizohata licensed, cpt refused");
    });
    s.guarded("conditions.audit_scale_invariance", [&] {
        ModelProblem m = builtin_model("mizohata");
        ModelProblem m3 = m;
        m3.f = m.f.scaled(3.0);
        m3.diff_op = derive_diff_op(m3);
        bool a = run_audit(m).licensed(), b = run_audit(m3).licensed();
        s.check("conditions.audit_scale_invariance", a == b ? 0.0 : 1.0, 0.5);
    });
}

void eikonal_suite(Suite& s, std::mt19937_64& rng)
{
    ModelProblem m = builtin_model("mizohata");
    IntegrateOptions opt;
    opt.phase.lambda = 256;
    opt.phase.im_w02_init = 0.25;
    PhaseTrajectory tr = integrate_phase(m, opt);
    s.guarded("eikonal.decoupling_closed_form", [&] {
        double w_err = 0.0, drift = 0.0;
        for (size_t i = 0; i < tr.pass1.size(); ++i) {
            PhaseState st = PhaseState::unpack(tr.layout1, tr.pass1.y[i]);
            const double t = tr.pass1.t[i];
            w_err = std::max(w_err, std::abs(st.w0 - cd(0.0, t * t / 2)));
            drift = std::max({drift, std::abs(st.x0[0] - m.x0[0]), std::abs(st.xi0[0] - m.xi0[0])});
        }
        s.check("eikonal.decoupling_w0", w_err, 1e-8);
        s.check("eikonal.decoupling_x0_xi0", drift, 1e-12);
    });
    s.guarded("eikonal.anchored_positivity", [&] {
        double neg = 0.0;
        for (size_t i = 0; i < tr.samples.size(); ++i) neg = std::max(neg, -tr.state(i).w0.imag());
        s.check("eikonal.anchored_positivity", neg, 1e-10);
    });
    s.guarded("eikonal.gate_monotone_in_lambda", [&] {
        double prev = INFINITY, worst = 0.0;
        for (double lam : {64.0, 256.0, 1024.0}) {
            IntegrateOptions o = opt;
            o.phase.lambda = lam;
            o.two_pass = true;
            PhaseTrajectory t = integrate_phase(m, o);
            double w = t.usable[1] - t.usable[0];
            worst = std::max(worst, w - prev);
            prev = w;
        }
        s.check("eikonal.gate_monotone_in_lambda", worst, 1e-12);
    });
    s.guarded("eikonal.gradient_matches_differences", [&] {
        auto probes = tube_probes(tr, 40, 11, tr.usable[0] * 0.8, tr.usable[1] * 0.8);
        double worst = 0.0;
        const double h = 1e-5;
        for (const auto& p : probes) {
            PhaseEval e = eval_phase(tr, p.t, p.x, p.y);
            cd ft = (eval_phase(tr, p.t + h, p.x, p.y).omega - eval_phase(tr, p.t - h, p.x, p.y).omega) / (2 * h);
            Eigen::VectorXd xp = p.x, xm = p.x, yp = p.y, ym = p.y;
            xp[0] += h;
            xm[0] -= h;
            yp[0] += h;
            ym[0] -= h;
            cd fx = (eval_phase(tr, p.t, xp, p.y).omega - eval_phase(tr, p.t, xm, p.y).omega) / (2 * h);
            cd fy = (eval_phase(tr, p.t, p.x, yp).omega - eval_phase(tr, p.t, p.x, ym).omega) / (2 * h);
            double sc = std::max({1.0, std::abs(e.d_t), std::abs(e.d_x[0])});
            worst = std::max({worst, std::abs(ft - e.d_t) / sc, std::abs(fx - e.d_x[0]) / sc,
                              std::abs(fy - e.d_y[0]) / sc});
        }
        s.check("eikonal.gradient_matches_differences", worst, 1e-7);
    });
    s.guarded("eikonal.rk4_matches_rk45", [&] {
        IntegrateOptions o = opt;
        o.adaptive = false;
        o.rk4_steps = 4000;
        PhaseTrajectory t4 = integrate_phase(m, o);
        double worst = 0.0;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double lo = std::max(t4.t_begin(), tr.t_begin()), hi = std::min(t4.t_end(), tr.t_end());
        Eigen::VectorXd a, da, b, db;
        for (int i = 0; i < 50; ++i) {
            double t = lo + (hi - lo) * u(rng);
            tr.samples.hermite(t, a, da);
            t4.samples.hermite(t, b, db);
            double wa = std::hypot(a[0], a[1]), wb = std::hypot(b[0], b[1]);
            worst = std::max(worst, std::hypot(a[0] - b[0], a[1] - b[1]) / std::max(wa, 1e-3));
            (void)wb;
        }
        s.check("eikonal.rk4_matches_rk45", worst, 1e-6);
    });
}

void transport_suite(Suite& s)
{
    ModelProblem m = builtin_model("mizohata");
    IntegrateOptions opt;
    opt.phase.lambda = 256;
    opt.phase.im_w02_init = 0.25;
    PhaseTrajectory tr = integrate_phase(m, opt);
    TransportOptions to;
    to.L = 1;
    AmplitudeSet amp = solve_transport(tr, to);
    s.guarded("transport.anchor_normalization", [&] {
        auto lv = amp.levels_at(amp.t0_anchor);
        double err = std::abs(lv[0][0] - 1.0);
        for (size_t l = 1; l < lv.size(); ++l) err = std::max(err, std::abs(lv[l][0]));
        s.check("transport.anchor_normalization", err, 1e-12);
    });
    s.guarded("transport.coefficient_bound", [&] {
        double worst = 0.0;
        for (int l = 0; l <= amp.L; ++l) worst = std::max(worst, amp.max_abs_coeff(l));
        s.check("transport.coefficient_bound", worst, 1e3);
    });
}

void synth_suite(Suite& s, std::mt19937_64& rng)
{
    FieldGrid f;
    f.axes = {{-1.0, 2.0 / 32, 32}, {-2.0, 4.0 / 16, 16}, {-3.0, 6.0 / 16, 16}};
    f.nx = f.ny = 1;
    f.values.resize(32 * 16 * 16);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : f.values) v = cd(n(rng), n(rng));
    s.guarded("synth.parseval", [&] {
        double a = sobolev_norm(f, 0.0), b = l2_norm(f);
        s.check("synth.parseval", std::abs(a - b) / b, 1e-10);
    });
    s.guarded("synth.cone_keeps_orthogonal_frequencies", [&] {
        FieldGrid g = f;
        const double k = axis_frequency(g.axes[0], 3);
        for (int it = 0; it < 32; ++it)
            for (size_t j = 0; j < g.stride(0); ++j) g.values[it * g.stride(0) + j] = std::exp(cd(0, k * g.axes[0].at(it)));
        Eigen::VectorXd dir = Eigen::Vector3d(0, 1, 0);
        FieldGrid a = cone_cutoff_apply(g, dir, M_PI / 6);
        for (size_t i = 0; i < a.size(); ++i) a.values[i] -= g.values[i];
        s.check("synth.cone_keeps_orthogonal_frequencies", l2_norm(a) / l2_norm(g), 1e-6);
    });
}

void cli_suite(Suite& s)
{
    s.guarded("cli.deterministic_report", [&] {
        RunConfig cfg;
        cfg.lambdas = {64, 128};
        cfg.grid.n_t = 128;
        ModelProblem m = builtin_model("mizohata");
        SweepResult a = violation_report(m, cfg, false), b = violation_report(m, cfg, false);
        bool same = report_csv(a.rows) == report_csv(b.rows) && summary_json(m, cfg, a) == summary_json(m, cfg, b);
        s.check("cli.deterministic_report", (same && a.rows.size() == 2) ? 0.0 : 1.0, 0.5);
    });
}

} // namespace

SelftestReport run_selftest(double tol_scale, unsigned long long seed)
{
    SelftestReport rep;
    Suite s{tol_scale, rep.checks};
    std::mt19937_64 rng(seed);
    symbols_suite(s, rng);
    conditions_suite(s);
    s.guarded("eikonal", [&] { eikonal_suite(s, rng); });
    s.guarded("transport", [&] { transport_suite(s); });
    synth_suite(s, rng);
    cli_suite(s);
    return rep;
}

} // namespace pseudomode
