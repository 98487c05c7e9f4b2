#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/eikonal.hpp"

#include <cmath>
#include <random>

using namespace pseudomode;
using Catch::Approx;

namespace {

const cd I(0, 1);

std::vector<int> ex(int n, std::initializer_list<std::pair<int, int>> nz)
{
    std::vector<int> e(n, 0);
    for (auto [i, v] : nz) e[i] = v;
    return e;
}

ModelProblem poly_model(std::vector<PolyTerm> terms)
{
    return polynomial_model("poly", VanishingOrder::finite(2), 1, 1, std::move(terms), Eigen::VectorXd::Ones(1),
                            Eigen::VectorXd::Ones(1));
}

IntegrateOptions options(double lambda, int K = 4)
{
    IntegrateOptions o;
    o.phase.lambda = lambda;
    o.phase.K = K;
    o.phase.im_w02_init = 0.25;
    o.gate.exit_level = 12.0 * std::pow(lambda, o.phase.rho);
    return o;
}

const PhaseTrajectory& mizohata_256()
{
    static const PhaseTrajectory tr = integrate_phase(builtin_model("mizohata"), options(256));
    return tr;
}

} // namespace

TEST_CASE("mizohata decouples with closed-form w0", "[eikonal]")
{
    const PhaseTrajectory& tr = mizohata_256();
    for (size_t i = 0; i < tr.pass1.size(); ++i) {
        PhaseState st = PhaseState::unpack(tr.layout1, tr.pass1.y[i]);
        const double t = tr.pass1.t[i];
        CHECK(std::abs(st.w0 - I * (t * t / 2)) < 1e-8);
        CHECK(st.x0[0] == tr.model.x0[0]);
        CHECK(st.xi0[0] == tr.model.xi0[0]);
    }
    CHECK(tr.t_cross == Approx(0.0).margin(1e-9));
    CHECK(tr.t0_anchor == Approx(0.0).margin(1e-9));
}

TEST_CASE("eta-independent f = -it gives w0 = i t^2/2 on the whole interval", "[eikonal]")
{
    ModelProblem m = poly_model({{-I, TCoef::pow(1), ex(4, {})}});
    PhaseTrajectory tr = integrate_phase(m, options(1024));
    for (size_t i = 0; i < tr.samples.size(); ++i) {
        const double t = tr.samples.t[i];
        CHECK(std::abs(tr.state(i).w0 - I * (t * t / 2)) < 1e-8);
    }
    CHECK(tr.usable[0] <= m.t_lo + 1e-12);
    CHECK(tr.usable[1] >= m.t_hi - 1e-12);
}

TEST_CASE("Im w0 is nonnegative and vanishes at the anchor", "[eikonal]")
{
    const PhaseTrajectory& tr = mizohata_256();
    double at_anchor = INFINITY;
    for (size_t i = 0; i < tr.samples.size(); ++i) {
        PhaseState st = tr.state(i);
        CHECK(st.w0.imag() >= -1e-10);
        if (std::abs(tr.samples.t[i] - tr.t0_anchor) < 1e-9) at_anchor = std::abs(st.w0);
    }
    CHECK(at_anchor < 1e-10);
    CHECK(tr.im_w0_min >= -1e-10);
}

TEST_CASE("Hessian blocks are symmetric with positive imaginary part", "[eikonal]")
{
    const PhaseTrajectory& tr = mizohata_256();
    for (size_t i = 0; i < tr.samples.size(); i += 25) {
        PhaseState st = tr.state(i);
        Eigen::MatrixXcd W20 = st.w20(tr.layout), W02 = st.w02(tr.layout);
        CHECK((W20 - W20.transpose()).norm() < 1e-12);
        CHECK((W02 - W02.transpose()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(W20.imag());
        CHECK(e.eigenvalues().minCoeff() > 0.0);
    }

    ModelProblem cpt = builtin_model("cpt");
    IntegrateOptions o = options(64);
    o.enforce_gate = false;
    PhaseTrajectory tc = integrate_phase(cpt, o);
    PhaseState st = tc.state(tc.samples.size() / 2);
    Eigen::MatrixXcd W02 = st.w02(tc.layout);
    REQUIRE(W02.rows() == 2);
    CHECK(std::abs(W02(0, 1) - W02(1, 0)) < 1e-12);
}

TEST_CASE("phase gradient matches finite differences", "[eikonal]")
{
    const PhaseTrajectory& tr = mizohata_256();
    auto probes = tube_probes(tr, 100, 5, tr.usable[0] * 0.8, tr.usable[1] * 0.8);
    REQUIRE(probes.size() == 100);
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
        double sc = std::max({1.0, std::abs(e.d_t), std::abs(e.d_x[0]), std::abs(e.d_y[0])});
        CHECK(std::abs(ft - e.d_t) / sc < 1e-7);
        CHECK(std::abs(fx - e.d_x[0]) / sc < 1e-7);
        CHECK(std::abs(fy - e.d_y[0]) / sc < 1e-7);
    }
}

TEST_CASE("raising K lowers the eikonal residual", "[eikonal]")
{
    // x-dependence makes the phase a genuine power series
    ModelProblem m = poly_model({{-I, TCoef::pow(1), ex(4, {{2, 2}})}, {I * 0.1, TCoef::pow(0), ex(4, {{0, 1}, {2, 2}})}});
    m.x0 = Eigen::VectorXd::Zero(1);
    PhaseTrajectory t4 = integrate_phase(m, options(256, 4));
    PhaseTrajectory t6 = integrate_phase(m, options(256, 6));
    const double lo = std::max(t4.usable[0], t6.usable[0]) * 0.9, hi = std::min(t4.usable[1], t6.usable[1]) * 0.9;
    auto probes = tube_probes(t4, 200, 9, lo, hi);
    double r4 = eikonal_residual(t4, probes).sup_residual;
    double r6 = eikonal_residual(t6, probes).sup_residual;
    CHECK(std::isfinite(r4));
    INFO("K=4 " << r4 << "  K=6 " << r6);
    CHECK(r6 < r4);
}

TEST_CASE("fixed-step RK4 matches the adaptive integrator", "[eikonal]")
{
    const PhaseTrajectory& tr = mizohata_256();
    IntegrateOptions o = options(256);
    o.adaptive = false;
    o.rk4_steps = 4000;
    PhaseTrajectory t4 = integrate_phase(builtin_model("mizohata"), o);
    const double lo = std::max(t4.t_begin(), tr.t_begin()), hi = std::min(t4.t_end(), tr.t_end());
    Eigen::VectorXd a, da, b, db;
    for (int i = 0; i <= 40; ++i) {
        double t = lo + (hi - lo) * i / 40;
        tr.samples.hermite(t, a, da);
        t4.samples.hermite(t, b, db);
        double scale = std::max(std::hypot(a[0], a[1]), 1e-3);
        CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) / scale < 1e-6);
    }
}

TEST_CASE("initial Hessian branches", "[eikonal]")
{
    SECTION("mizohata: no x or xi dependence, branch 2")
    {
        ModelProblem m = builtin_model("mizohata");
        InitialW2 w = choose_initial_w2(m, 0.0, m.x0, m.xi0);
        CHECK(w.branch == 2);
        CHECK(std::abs(w.W20(0, 0) - I * 10.0) < 1e-14);
    }
    SECTION("Im d_xi f = 1, Im d_x f = 0.3: Re w20 = -0.3")
    {
        ModelProblem m = poly_model({{-I, TCoef::pow(1), ex(4, {{2, 2}})},
                                     {I * 0.3, TCoef::pow(0), ex(4, {{0, 1}, {2, 2}})},
                                     {I, TCoef::pow(0), ex(4, {{1, 1}, {2, 2}})},
                                     {-I, TCoef::pow(0), ex(4, {{2, 2}})}});
        InitialW2 w = choose_initial_w2(m, 0.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
        CHECK(w.branch == 1);
        CHECK(w.W20(0, 0).real() == Approx(-0.3).margin(1e-12));
        CHECK(w.W20(0, 0).imag() == Approx(0.1).margin(1e-12));
    }
    SECTION("f = i(-t + beta x) eta^2: branch 2 and x0'(0) = beta/10")
    {
        const double beta = 0.05;
        ModelProblem m = poly_model({{-I, TCoef::pow(1), ex(4, {{2, 2}})}, {I * beta, TCoef::pow(0), ex(4, {{0, 1}, {2, 2}})}});
        m.x0 = Eigen::VectorXd::Zero(1);
        InitialW2 w = choose_initial_w2(m, 0.0, m.x0, m.xi0);
        CHECK(w.branch == 2);
        PhaseTrajectory tr = integrate_phase(m, options(256));
        Eigen::VectorXd v, dv;
        tr.pass1.hermite(tr.t_cross, v, dv);
        CHECK(std::abs(PhaseState::unpack(tr.layout1, dv).x0[0]) == Approx(beta / 10).epsilon(1e-9));
    }
    SECTION("third-order crossing falls back")
    {
        ModelProblem m = poly_model({{-I, TCoef::pow(3), ex(4, {{2, 2}})}});
        InitialW2 w = choose_initial_w2(m, 0.0, m.x0, m.xi0);
        CHECK(w.higher_order);
        CHECK(w.branch == 0);
    }
}

TEST_CASE("usable interval shrinks as lambda grows", "[eikonal]")
{
    ModelProblem m = builtin_model("mizohata");
    double prev = INFINITY;
    for (double lam : {64.0, 256.0, 1024.0}) {
        PhaseTrajectory tr = integrate_phase(m, options(lam));
        double w = tr.usable[1] - tr.usable[0];
        CHECK(w > 0.0);
        CHECK(w <= prev);
        prev = w;
    }
}

TEST_CASE("forced cpt leaves an empty gate at large lambda", "[eikonal]")
{
    ModelProblem m = builtin_model("cpt");
    try {
        integrate_phase(m, options(1e3));
        FAIL("expected GateEmpty");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::GateEmpty);
    }
}

TEST_CASE("mizohata zeta0 stays bounded and decreases in lambda", "[eikonal]")
{
    ModelProblem m = builtin_model("mizohata");
    double prev = INFINITY;
    for (double lam : {64.0, 256.0, 1024.0}) {
        PhaseTrajectory tr = integrate_phase(m, options(lam));
        double worst = 0.0;
        for (size_t i = 0; i < tr.samples.size(); ++i)
            if (tr.samples.t[i] >= tr.usable[0] && tr.samples.t[i] <= tr.usable[1])
                worst = std::max(worst, tr.state(i).zeta.cwiseAbs().maxCoeff());
        INFO("lambda " << lam << "  max |zeta0| " << worst);
        CHECK(worst <= 1.0);
        CHECK(worst < prev);
        prev = worst;
    }
}
