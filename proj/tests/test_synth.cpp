#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/pipeline.hpp"
#include "pseudomode/synth.hpp"

#include <cmath>
#include <random>

using namespace pseudomode;
using Catch::Approx;

namespace {

const cd I(0, 1);

IntegrateOptions options(double lambda)
{
    IntegrateOptions o;
    o.phase.lambda = lambda;
    o.phase.im_w02_init = 0.25;
    o.gate.exit_level = 12.0 * std::pow(lambda, o.phase.rho);
    return o;
}

TransportOptions transport()
{
    TransportOptions t;
    t.cutoff = {6.0, 1.0, 12.0};
    return t;
}

FieldGrid box(int nt, int nx, int ny)
{
    FieldGrid f;
    f.axes = {{-1.0, 2.0 / nt, nt}, {-2.0, 4.0 / nx, nx}, {-3.0, 6.0 / ny, ny}};
    f.nx = f.ny = 1;
    f.values.assign(size_t(nt) * nx * ny, cd(0.0));
    return f;
}

template <class F>
void fill(FieldGrid& g, F fn)
{
    const int nt = g.axes[0].n, nx = g.axes[1].n, ny = g.axes[2].n;
    for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nx; ++j)
            for (int k = 0; k < ny; ++k)
                g.values[(size_t(i) * nx + j) * ny + k] = fn(g.axes[0].at(i), g.axes[1].at(j), g.axes[2].at(k));
}

struct Mizohata {
    ModelProblem m = builtin_model("mizohata");
    PhaseTrajectory tr;
    AmplitudeSet amp;
    explicit Mizohata(double lambda) : tr(integrate_phase(m, options(lambda))), amp(solve_transport(tr, transport())) {}
};

} // namespace

TEST_CASE("sobolev norm at s = 0 is the L2 norm", "[synth]")
{
    FieldGrid f = box(32, 16, 16);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& v : f.values) v = cd(n(rng), n(rng));
    CHECK(std::abs(sobolev_norm(f, 0.0) - l2_norm(f)) / l2_norm(f) < 1e-10);
}

TEST_CASE("single Fourier mode scales by (1+|zeta|^2)^{s/2}", "[synth]")
{
    FieldGrid f = box(32, 32, 16);
    const double kt = axis_frequency(f.axes[0], 3), kx = axis_frequency(f.axes[1], 5), ky = axis_frequency(f.axes[2], 2);
    fill(f, [&](double t, double x, double y) { return std::exp(I * (kt * t + kx * x + ky * y)); });
    const double z2 = kt * kt + kx * kx + ky * ky;
    for (double s : {-2.0, -1.0, 1.0}) {
        double expect = std::pow(1 + z2, s / 2) * l2_norm(f);
        CHECK(sobolev_norm(f, s) == Approx(expect).epsilon(0.02));
    }
}

TEST_CASE("cone cutoff", "[synth]")
{
    FieldGrid f = box(32, 32, 16);
    Eigen::VectorXd dir = Eigen::Vector3d(0, 1, 0);
    SECTION("frequencies inside the cone are removed")
    {
        const double kx = axis_frequency(f.axes[1], 6);
        fill(f, [&](double, double x, double) { return std::exp(I * kx * x); });
        CHECK(l2_norm(cone_cutoff_apply(f, dir, M_PI / 6)) < 1e-8 * l2_norm(f));
    }
    SECTION("orthogonal frequencies pass")
    {
        const double kt = axis_frequency(f.axes[0], 4), ky = axis_frequency(f.axes[2], 3);
        fill(f, [&](double t, double, double y) { return std::exp(I * (kt * t + ky * y)); });
        FieldGrid a = cone_cutoff_apply(f, dir, M_PI / 6);
        for (size_t i = 0; i < a.size(); ++i) a.values[i] -= f.values[i];
        CHECK(l2_norm(a) < 1e-6 * l2_norm(f));
    }
}

TEST_CASE("direct application of the operator", "[synth]")
{
    ModelProblem m = builtin_model("mizohata");
    FieldGrid f = box(64, 16, 32);
    SECTION("plane wave reproduces the symbol")
    {
        const double kx = axis_frequency(f.axes[1], 3), ky = axis_frequency(f.axes[2], 4);
        fill(f, [&](double, double x, double y) { return std::exp(I * (kx * x + ky * y)); });
        FieldGrid p = apply_direct(m, f);
        const int nt = f.axes[0].n, nx = f.axes[1].n, ny = f.axes[2].n;
        double worst = 0.0;
        for (int i = 4; i < nt - 4; ++i)
            for (int j = 0; j < nx; ++j)
                for (int k = 0; k < ny; ++k) {
                    size_t idx = (size_t(i) * nx + j) * ny + k;
                    const double t = f.axes[0].at(i);
                    cd sym = m.f.eval(SymbolPoint(t, Eigen::VectorXd::Constant(1, f.axes[1].at(j)),
                                                  Eigen::VectorXd::Constant(1, kx), Eigen::VectorXd::Constant(1, ky),
                                                  Eigen::VectorXd::Constant(1, f.axes[2].at(k))));
                    worst = std::max(worst, std::abs(p.values[idx] - sym * f.values[idx]) / (ky * ky));
                }
        CHECK(worst < 1e-6);
    }
    SECTION("a constant field is annihilated in the t-interior")
    {
        fill(f, [](double, double, double) { return cd(2.0, -1.0); });
        FieldGrid p = apply_direct(m, f);
        const size_t plane = f.stride(0);
        for (int i = 4; i < f.axes[0].n - 4; ++i)
            for (size_t j = 0; j < plane; ++j) CHECK(std::abs(p.values[i * plane + j]) < 1e-10);
    }
    SECTION("missing diff_op is an error")
    {
        ModelProblem bare = m;
        bare.diff_op.clear();
        CHECK_THROWS_AS(apply_direct(bare, f), Error);
    }
}

TEST_CASE("synthesized mizohata pseudomode", "[synth]")
{
    const double lam = 256;
    Mizohata z(lam);
    PhaseState st = z.tr.state(0);
    for (size_t i = 0; i < z.tr.samples.size(); ++i)
        if (z.tr.samples.t[i] == z.tr.t0_anchor) st = z.tr.state(i);

    SECTION("spine: |u| = exp(-lambda Im w0) |phi| chi along (x0(t), y0(t)) with Im w0 ~ t^2/2")
    {
        CutoffScales cs = CutoffScales::make(z.tr.scales, z.m, z.amp.cutoff);
        const int n = 41;
        const double lo = z.tr.usable[0] * 0.5, hi = z.tr.usable[1] * 0.5;
        for (int i = 0; i < n; ++i) {
            const double t = lo + (hi - lo) * i / (n - 1);
            PhaseState s, ds;
            z.tr.state_at(t, s, ds);
            FieldGrid point;
            point.nx = point.ny = 1;
            point.lambda = lam;
            point.axes = {{t, 1.0, 1}, {s.x0[0], 1.0, 1}, {s.y0[0], 1.0, 1}};
            point.values.assign(1, cd(0.0));
            const double u = std::abs(synthesize(z.tr, z.amp, point).values[0]);
            const double phi = std::abs(z.amp.total_at(t)[0]);
            const double im = s.w0.imag();
            CHECK(u == Approx(std::exp(-lam * im) * phi * chi_weight(cs, im)).epsilon(1e-9));
            CHECK(im == Approx(t * t / 2).epsilon(0.1));
            if (i == n / 2) CHECK(u == Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("peak sits within one cell of the anchor")
    {
        GridSpec gs;
        gs.n_t = 128;
        FieldGrid u = synthesize(z.tr, z.amp, make_grid(z.tr, z.amp, gs));
        size_t best = 0;
        for (size_t i = 1; i < u.size(); ++i)
            if (std::abs(u.values[i]) > std::abs(u.values[best])) best = i;
        const int ny = u.axes[2].n, nx = u.axes[1].n;
        const int k = best % ny, j = (best / ny) % nx, i = best / (size_t(nx) * ny);
        CHECK(std::abs(u.axes[0].at(i) - z.tr.t0_anchor) <= u.axes[0].h);
        CHECK(std::abs(u.axes[1].at(j) - st.x0[0]) <= u.axes[1].h);
        CHECK(std::abs(u.axes[2].at(k) - st.y0[0]) <= u.axes[2].h);
    }
    SECTION("grid resolves the oscillation; refinement in x leaves the norms unchanged")
    {
        GridSpec gs;
        gs.n_t = 128;
        FieldGrid g = make_grid(z.tr, z.amp, gs);
        CHECK(g.axes[1].h * lam * std::abs(z.m.xi0[0]) <= M_PI / 3 + 1e-12);
        FieldGrid u = synthesize(z.tr, z.amp, g);
        gs.n_gx = 2 * g.axes[1].n;
        FieldGrid u2 = synthesize(z.tr, z.amp, make_grid(z.tr, z.amp, gs));
        CHECK(l2_norm(u2) == Approx(l2_norm(u)).epsilon(0.01));
        CHECK(sobolev_norm(u2, -3) == Approx(sobolev_norm(u, -3)).epsilon(0.01));
        CHECK(l2_norm(apply_direct(z.m, u2)) == Approx(l2_norm(apply_direct(z.m, u))).epsilon(0.01));
    }
}

TEST_CASE("expansion residual vanishes for a t-only symbol with uniform amplitude", "[synth]")
{
    const double lam = 256;
    ModelProblem m = polynomial_model("t_only", VanishingOrder::finite(2), 1, 1, {{-I, TCoef::pow(1), {0, 0, 0, 0}}},
                                      Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    m.diff_op.clear();
    m.diff_op.push_back({SymbolFunction::polynomial(1, 1, {{cd(1.0), TCoef::pow(0), {0, 0, 0, 0}}}), 1, {0}, {0}});
    m.diff_op.push_back({m.f.scaled(lam), 0, {0}, {0}});
    PhaseTrajectory tr = integrate_phase(m, options(lam));
    AmplitudeSet amp = solve_transport(tr, transport());
    GridSpec gs;
    gs.n_t = 64;
    FieldGrid u = synthesize(tr, amp, make_grid(tr, amp, gs));
    ExpansionOptions eo;
    eo.differentiate_cutoff = false;
    CHECK(l2_norm(apply_via_expansion(tr, amp, u, eo)) <= 1e-10 * l2_norm(u));
}

TEST_CASE("expansion and direct residuals agree for mizohata", "[synth]")
{
    Mizohata z(128);
    GridSpec gs;
    FieldGrid u = synthesize(z.tr, z.amp, make_grid(z.tr, z.amp, gs));
    const double e = l2_norm(apply_via_expansion(z.tr, z.amp, u)), d = l2_norm(apply_direct(z.m, u));
    CHECK(std::abs(e - d) <= 0.05 * d);
    CHECK(d <= 0.1 * l2_norm(u));
}

TEST_CASE("ratio is recomputable from the stored norms", "[synth]")
{
    NormReport r;
    r.Pu_nu = 1.25e-6;
    r.u_minusNn = 3.5e-9;
    r.Au_zero = 7.0e-12;
    r.u_minusN = 0.125;
    r.ratio = NormReport::compose_ratio(r.Pu_nu, r.u_minusNn, r.Au_zero, r.u_minusN);
    CHECK(r.ratio == (r.Pu_nu + r.u_minusNn + r.Au_zero) / r.u_minusN);
}
