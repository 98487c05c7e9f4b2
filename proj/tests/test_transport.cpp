#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/transport.hpp"

#include <cmath>

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

// f = -it has degree 0 in (xi, eta); its operator is built at the fixed lambda used for the phase.
ModelProblem t_only_model(double lambda, std::optional<SymbolFunction> F0 = std::nullopt)
{
    ModelProblem m = polynomial_model("t_only", VanishingOrder::finite(2), 1, 1, {{-I, TCoef::pow(1), {0, 0, 0, 0}}},
                                      Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
    m.F0 = F0;
    m.diff_op.clear();
    m.diff_op.push_back({SymbolFunction::polynomial(1, 1, {{cd(1.0), TCoef::pow(0), {0, 0, 0, 0}}}), 1, {0}, {0}});
    m.diff_op.push_back({m.f.scaled(lambda), 0, {0}, {0}});
    if (F0) m.diff_op.push_back({*F0, 0, {0}, {0}});
    return m;
}

std::vector<double> grid(double lo, double hi, int n)
{
    std::vector<double> t;
    for (int i = 0; i <= n; ++i) t.push_back(lo + (hi - lo) * i / n);
    return t;
}

} // namespace

TEST_CASE("amplitudes are normalized at the anchor", "[transport]")
{
    ModelProblem m = builtin_model("mizohata");
    PhaseTrajectory tr = integrate_phase(m, options(256));
    TransportOptions to;
    to.L = 2;
    AmplitudeSet amp = solve_transport(tr, to);
    auto lv = amp.levels_at(amp.t0_anchor);
    REQUIRE(lv.size() == 3);
    CHECK(lv[0][0] == cd(1.0));
    CHECK(lv[1][0] == cd(0.0));
    CHECK(lv[2][0] == cd(0.0));
}

TEST_CASE("mizohata: the constant coefficient is stationary at t = 0", "[transport]")
{
    ModelProblem m = builtin_model("mizohata");
    PhaseTrajectory tr = integrate_phase(m, options(256));
    AmplitudeSet amp = solve_transport(tr, TransportOptions{});
    std::vector<CPoly> d;
    amp.levels_at(0.0, &d);
    CHECK(std::abs(d[0][0]) < 1e-10);
}

TEST_CASE("t-only symbol without F0 gives the constant amplitude 1", "[transport]")
{
    ModelProblem m = t_only_model(256);
    PhaseTrajectory tr = integrate_phase(m, options(256));
    TransportOptions to;
    to.L = 1;
    AmplitudeSet amp = solve_transport(tr, to);
    for (double t : grid(amp.samples.t.front(), amp.samples.t.back(), 50)) {
        std::vector<CPoly> d;
        auto lv = amp.levels_at(t, &d);
        CHECK(std::abs(lv[0][0] - 1.0) < 1e-12);
        for (int i = 1; i < lv[0].size(); ++i) CHECK(std::abs(lv[0][i]) < 1e-12);
        for (int i = 0; i < lv[1].size(); ++i) CHECK(std::abs(lv[1][i]) < 1e-12);
        for (int i = 0; i < d[0].size(); ++i) CHECK(std::abs(d[0][i]) < 1e-12);
    }
}

TEST_CASE("spatially constant F0 = g(t) gives phi = exp(-i int g)", "[transport]")
{
    // g(t) = 0.5 t + 0.2
    SymbolFunction g = SymbolFunction::polynomial(1, 1, {{cd(0.5), TCoef::pow(1), {0, 0, 0, 0}},
                                                         {cd(0.2), TCoef::pow(0), {0, 0, 0, 0}}});
    ModelProblem m = t_only_model(256, g);
    PhaseTrajectory tr = integrate_phase(m, options(256));
    AmplitudeSet amp = solve_transport(tr, TransportOptions{});
    const double t0 = amp.t0_anchor;
    auto G = [](double t) { return 0.25 * t * t + 0.2 * t; };
    for (double t : grid(amp.samples.t.front(), amp.samples.t.back(), 40)) {
        cd expect = std::exp(-I * (G(t) - G(t0)));
        CHECK(std::abs(amp.levels_at(t)[0][0] - expect) < 1e-8);
    }
}

TEST_CASE("mizohata amplitudes stay bounded and resolve", "[transport]")
{
    ModelProblem m = builtin_model("mizohata");
    SECTION("L = 1, M_a = 2: phi_0 bounded by 2; matches a 10x finer integration")
    {
        IntegrateOptions o = options(256);
        PhaseTrajectory tr = integrate_phase(m, o);
        o.pass2_min_samples *= 10;
        PhaseTrajectory fine = integrate_phase(m, o);
        TransportOptions to;
        to.L = 1;
        to.M_a = 2;
        AmplitudeSet amp = solve_transport(tr, to);
        AmplitudeSet ref = solve_transport(fine, to);
        CHECK(amp.max_abs_coeff(0) <= 2.0);
        for (double t : grid(tr.usable[0], tr.usable[1], 40)) {
            auto a = amp.levels_at(t), b = ref.levels_at(t);
            for (size_t l = 0; l < a.size(); ++l)
                for (int i = 0; i < a[l].size(); ++i) CHECK(std::abs(a[l][i] - b[l][i]) < 1e-6);
        }
    }
    SECTION("uniform in lambda")
    {
        for (double lam : {64.0, 256.0, 1024.0}) {
            PhaseTrajectory tr = integrate_phase(m, options(lam));
            TransportOptions to;
            to.L = 1;
            AmplitudeSet amp = solve_transport(tr, to);
            for (int l = 0; l <= amp.L; ++l) CHECK(amp.max_abs_coeff(l) <= 1e3);
        }
    }
}

TEST_CASE("cutoff weights", "[transport]")
{
    ModelProblem m = builtin_model("mizohata");
    PhaseTrajectory tr = integrate_phase(m, options(256));
    CutoffParams p;
    CutoffScales cs = CutoffScales::make(tr.scales, m, p);
    PhaseState st = tr.state(0);
    for (size_t i = 0; i < tr.samples.size(); ++i)
        if (std::abs(tr.samples.t[i] - tr.t0_anchor) < 1e-12) st = tr.state(i);

    CHECK(apply_cutoffs(tr, p, tr.t0_anchor, st.x0, st.y0) == 1.0);

    Eigen::VectorXd dx = Eigen::VectorXd::Constant(1, 3.0 * p.R_x / cs.sx), dy = Eigen::VectorXd::Zero(1);
    CHECK(psi_weight(cs, dx, dy) == 0.0);

    double prev = 1.0;
    for (double a : {1.0, 1.25, 1.5, 1.75, 2.0}) {
        double w = chi_weight(cs, a * p.R_t / cs.st);
        if (a == 1.5) {
            CHECK(w > 0.0);
            CHECK(w < 1.0);
        }
        CHECK(w <= prev);
        prev = w;
    }
    CHECK(prev == 0.0);
    CHECK(smooth_step(0.5) == 1.0);
    CHECK(smooth_step(2.5) == 0.0);
}
