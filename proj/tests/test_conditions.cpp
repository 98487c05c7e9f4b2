#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/conditions.hpp"

#include <cmath>

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

ModelProblem numeric_model(SymbolFunction::Callable fn)
{
    ModelProblem m = builtin_model("mizohata");
    m.label = "numeric";
    m.f = SymbolFunction::numeric(1, 1, std::move(fn));
    m.diff_op.clear();
    return m;
}

ModelProblem poly_model(std::vector<PolyTerm> terms)
{
    return polynomial_model("poly", VanishingOrder::finite(2), 1, 1, std::move(terms), Eigen::VectorXd::Ones(1),
                            Eigen::VectorXd::Ones(1));
}

std::vector<GateSample> parabola_samples(double lo, double hi, int n)
{
    std::vector<GateSample> s;
    for (int i = 0; i <= n; ++i) {
        double t = lo + (hi - lo) * i / n;
        s.push_back({t, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), t * t / 2});
    }
    return s;
}

} // namespace

TEST_CASE("mizohata sign change", "[conditions]")
{
    ModelProblem m = builtin_model("mizohata");
    SignChangeReport r = detect_sign_change(m, LinePoint::base(m), -1, 1);
    REQUIRE(r.found);
    CHECK(std::abs(r.t_cross) < 1e-9);
    CHECK(r.order_estimate == 1);
    CHECK(r.direction == Direction::PlusToMinus);
    CHECK(std::string(to_string(r.direction)) == "plus_to_minus");
    CHECK(r.I_prime[0] >= -1.0);
    CHECK(r.I_prime[1] <= 1.0);
    // sampled sign invariant
    SymbolPoint a = m.base_point(r.t_cross - 0.01), b = m.base_point(r.t_cross + 0.01);
    CHECK(m.f.eval(a).imag() * m.f.eval(b).imag() < 0);
}

TEST_CASE("no sign change is refused", "[conditions]")
{
    ModelProblem m = poly_model({{I, TCoef::pow(0), ex(4, {})}});
    CHECK_THROWS_AS(detect_sign_change(m, LinePoint::base(m), -1, 1), Error);
    try {
        detect_sign_change(m, LinePoint::base(m), -1, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoSignChange);
    }
}

TEST_CASE("cubic crossing has order three", "[conditions]")
{
    ModelProblem m = poly_model({{-I, TCoef::pow(3), ex(4, {})}});
    SignChangeReport r = detect_sign_change(m, LinePoint::base(m), -1, 1);
    REQUIRE(r.found);
    CHECK(std::abs(r.t_cross) < 1e-6);
    CHECK(r.order_estimate == 3);
}

TEST_CASE("adjoint reverses the direction label", "[conditions]")
{
    for (const auto& name : {"mizohata", "cpt"}) {
        ModelProblem m = builtin_model(name);
        ModelProblem c = conjugate_flip(m);
        auto a = detect_sign_change(m, LinePoint::base(m), m.t_lo, m.t_hi);
        auto b = detect_sign_change(c, LinePoint::base(c), c.t_lo, c.t_hi);
        CHECK(a.direction != b.direction);
    }
}

TEST_CASE("minimal bicharacteristic search", "[conditions]")
{
    SECTION("mizohata: uniform gap returns the center")
    {
        ModelProblem m = builtin_model("mizohata");
        BicharSearch s = minimal_bichar_search(m, m.x0, m.xi0, 0.5, 5, -1, 1);
        CHECK((s.x - m.x0).norm() == 0.0);
        CHECK((s.xi - m.xi0).norm() == 0.0);
        CHECK(s.L <= s.L_center);
    }
    SECTION("zero plateau of width 2 x^2 is shortest at x = 0")
    {
        ModelProblem m = numeric_model([](const SymbolPoint& p) {
            double w = p.x[0] * p.x[0];
            double g = std::max(0.0, std::abs(p.t) - w);
            return cd(0.0, -(p.t > 0 ? 1.0 : -1.0) * g * g);
        });
        Eigen::VectorXd xc = Eigen::VectorXd::Constant(1, 0.3);
        BicharSearch s = minimal_bichar_search(m, xc, m.xi0, 0.5, 11, -1, 1, 512);
        CHECK(std::abs(s.x[0]) <= 0.1 + 1e-12);
        CHECK(s.L <= s.L_center);
        // brute-force oracle on the same grid
        double best = INFINITY;
        for (int i = 0; i < 11; ++i) {
            LinePoint at{Eigen::VectorXd::Constant(1, -0.2 + 0.1 * i), m.xi0, m.eta0, m.y0};
            best = std::min(best, crossing_gap(m, at, -1, 1, 512));
        }
        CHECK(s.L == Approx(best).margin(1e-12));
    }
}

TEST_CASE("condition audits of the examples", "[conditions]")
{
    SECTION("mizohata holds; eps = 0.25 passes the bound")
    {
        ModelProblem m = builtin_model("mizohata");
        AuditOptions opt;
        ConditionAudit a = audit_conditions(m, AuditRegion::around(m), opt);
        CHECK(a.kcond.holds);
        CHECK(a.hessian.holds);
        CHECK(a.leaf.holds);
        CHECK(a.leaf.worst_ratio == 0.0);
        CHECK(a.kcond.per_epsilon.at(0.25).first <= opt.bound);
        CHECK(a.licensed());
    }
    SECTION("cpt fails for every eps")
    {
        ModelProblem m = builtin_model("cpt");
        AuditOptions opt;
        ConditionAudit a = audit_conditions(m, AuditRegion::around(m), opt);
        CHECK_FALSE(a.kcond.holds);
        for (const auto& [eps, v] : a.kcond.per_epsilon) CHECK(v.first > opt.bound);
        CHECK_FALSE(a.licensed());
    }
    SECTION("verdicts are invariant under positive scaling of f")
    {
        for (const auto& name : {"mizohata", "cpt"}) {
            ModelProblem m = builtin_model(name);
            ModelProblem s = m;
            s.f = m.f.scaled(4.0);
            auto a = audit_conditions(m, AuditRegion::around(m));
            auto b = audit_conditions(s, AuditRegion::around(s));
            CHECK(a.kcond.holds == b.kcond.holds);
            CHECK(a.hessian.holds == b.hessian.holds);
            CHECK(a.leaf.holds == b.leaf.holds);
        }
    }
}

TEST_CASE("lemclaim gate", "[conditions]")
{
    ModelProblem m = builtin_model("mizohata");
    auto samples = parabola_samples(-1, 1, 4000);
    const size_t anchor = 2000;

    SECTION("mizohata: nonempty and shrinking in lambda")
    {
        std::vector<double> lx, lw;
        double prev = INFINITY;
        for (double lam : {64.0, 256.0, 1024.0, 4096.0}) {
            GateResult g = lemclaim_gate(samples, anchor, m, lam);
            CHECK_FALSE(g.empty());
            double w = g.t_plus - g.t_minus;
            CHECK(w <= prev);
            prev = w;
            lx.push_back(std::log(lam));
            lw.push_back(std::log(w));
        }
        CHECK((lw.back() - lw.front()) / (lx.back() - lx.front()) < 0.0);
    }
    SECTION("eta-independent f keeps the whole interval")
    {
        ModelProblem flat = poly_model({{-I, TCoef::pow(1), ex(4, {})}});
        GateResult g = lemclaim_gate(samples, anchor, flat, 1e4);
        CHECK(g.t_minus == -1.0);
        CHECK(g.t_plus == 1.0);
        for (const auto& row : g.integrals) CHECK(row.I1 == 0.0);
    }
    SECTION("x-dependent f: gate edge matches the closed-form integral")
    {
        // f = i(-t + x) eta^2 on x0 = 0: the largest integrand is lambda^{1/2} |d_x d_eta f| = 2 lambda^{1/2}
        ModelProblem c = poly_model({{-I, TCoef::pow(1), ex(4, {{2, 2}})}, {I, TCoef::pow(0), ex(4, {{0, 1}, {2, 2}})}});
        const double lam = 1e4;
        GateResult g = lemclaim_gate(samples, anchor, c, lam);
        double edge = g.bound / (2 * std::sqrt(lam));
        CHECK(g.t_plus == Approx(edge).margin(1e-3));
        CHECK(g.t_minus == Approx(-edge).margin(1e-3));
        CHECK(g.empty()); // lambda Im w0 stays below lambda^kappa inside the edge
    }
    SECTION("anchor must sit at Im w0 = 0")
    {
        CHECK_THROWS_AS(lemclaim_gate(samples, anchor + 100, m, 256), Error);
    }
}

TEST_CASE("intlem closed-form cases", "[conditions]")
{
    SECTION("F = t^2/2 on [-kappa, 0]")
    {
        const double kappa = 0.1;
        std::vector<double> t, F;
        for (int i = 0; i <= 2000; ++i) {
            double s = -kappa + kappa * i / 2000;
            t.push_back(s);
            F.push_back(s * s / 2);
        }
        IntlemResult r = intlem_check(t, F, -kappa, 1.0, 1.0, 0.5 * (1 - 1e-9));
        CHECK(r.kappa == Approx(kappa).epsilon(1e-6));
        CHECK(r.lhs == Approx(kappa * kappa / 2).epsilon(1e-12));
        CHECK(r.pass);
    }
    SECTION("F = 0 is vacuous")
    {
        std::vector<double> t{-1, -0.5, 0}, F{0, 0, 0};
        IntlemResult r = intlem_check(t, F, -0.5, 0.5, 1.0);
        CHECK(r.pass);
        CHECK(r.kappa == 0.0);
    }
    SECTION("F = t^4 with t0 = -kappa^{1/3}")
    {
        // F'(t0) = 4 t0^3 = -kappa
        const double kappa = 0.2;
        const double t0 = -std::cbrt(kappa / 4);
        std::vector<double> t, F;
        for (int i = 0; i <= 4000; ++i) {
            double s = t0 - t0 * i / 4000.0;
            t.push_back(s);
            F.push_back(s * s * s * s);
        }
        IntlemResult r = intlem_check(t, F, t0, 1.0 / 3, std::abs(t0) / std::cbrt(kappa), 0.5 * std::pow(t0, 4) / std::pow(kappa, 4.0 / 3));
        CHECK(r.lhs == Approx(std::pow(t0, 4)).epsilon(1e-12));
        CHECK(r.pass);
        IntlemResult d = intlem_check(t, F, t0, 1.0 / 3, std::abs(t0) / std::cbrt(kappa));
        CHECK(d.pass);
    }
    SECTION("the |t0| lower bound is a precondition")
    {
        std::vector<double> t, F;
        for (int i = 0; i <= 100; ++i) {
            double s = -0.1 + 0.1 * i / 100;
            t.push_back(s);
            F.push_back(s * s / 2);
        }
        CHECK_THROWS_AS(intlem_check(t, F, -0.1, 0.5, 10.0), Error);
    }
}
