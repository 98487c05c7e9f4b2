#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/symbols.hpp"

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

SymbolPoint pt(double t, double x, double xi, Eigen::VectorXd eta, Eigen::VectorXd y = {})
{
    if (y.size() == 0) y = Eigen::VectorXd::Zero(eta.size());
    return SymbolPoint(t, Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, xi), eta, y);
}

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }
Eigen::VectorXd v2(double a, double b) { return Eigen::Vector2d(a, b); }

} // namespace

TEST_CASE("mizohata second eta derivative", "[symbols]")
{
    ModelProblem m = builtin_model("mizohata");
    Orders o(1, 1);
    o.set(1, Slot::Eta, 0, 2);
    for (double x : {-2.0, 0.0, 5.0}) CHECK(std::abs(eval_partial(m.f, o, pt(3.0, x, 1.7, v1(0.4))) - cd(0, -6)) < 1e-14);
}

TEST_CASE("zero orders return the value", "[symbols]")
{
    ModelProblem m = builtin_model("cpt_gen");
    SymbolPoint p = pt(0.3, 0.1, 2.0, v2(0.5, -0.7), v2(0.2, 0.1));
    CHECK(eval_partial(m.f, Orders(1, 2), p) == m.f.eval(p));
}

TEST_CASE("cpt mixed eta derivative is i", "[symbols]")
{
    ModelProblem m = builtin_model("cpt");
    Orders o(1, 2);
    o.set(1, Slot::Eta, 0, 1).set(1, Slot::Eta, 1, 1);
    CHECK(std::abs(eval_partial(m.f, o, pt(-0.4, 1.0, 3.0, v2(2.0, 5.0))) - I) < 1e-14);
}

TEST_CASE("derivative budget is enforced", "[symbols]")
{
    SymbolFunction g = SymbolFunction::numeric(1, 1, [](const SymbolPoint& p) { return cd(std::sin(p.t)); }, 3);
    Orders o(1, 1);
    o.t = 4;
    CHECK_THROWS_AS(eval_partial(g, o, pt(0, 0, 1, v1(0))), Error);
}

TEST_CASE("finite differences agree with exact partials", "[symbols]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<PolyTerm> terms;
    for (int i = 0; i < 5; ++i) {
        std::vector<int> e(4);
        for (auto& v : e) v = static_cast<int>(rng() % 3);
        terms.push_back({cd(u(rng), u(rng)), TCoef::pow(static_cast<int>(rng() % 3)), e});
    }
    SymbolFunction f = SymbolFunction::polynomial(1, 1, terms);
    SymbolFunction g = SymbolFunction::numeric(1, 1, [f](const SymbolPoint& p) { return f.eval(p); });
    for (int trial = 0; trial < 10; ++trial) {
        SymbolPoint p = pt(4 * u(rng), 4 * u(rng), 4 * u(rng), v1(4 * u(rng)), v1(4 * u(rng)));
        for (int a = 0; a < 4; ++a) {
            Orders o(1, 1);
            o.e[a] = 1;
            o.e[(a + 1) % 4] += 1;
            cd e = f.partial(o, p), d = g.partial(o, p);
            CHECK(std::abs(e - d) <= 1e-6 * std::max(1.0, std::abs(e)));
        }
    }
}

TEST_CASE("reduced subprincipal symbols of the examples", "[symbols]")
{
    SECTION("mizohata: i a(t) eta^2 with a(t) = -t")
    {
        ModelProblem m = builtin_model("mizohata");
        JetPolynomial J = reduced_subprincipal(m.f, SymbolFunction::zero(1, 1), m.k, m.base_point(0.7));
        CHECK(std::abs(J.eval(v1(2.0)) - I * (-0.7) * 4.0) < 1e-14);
        CHECK(J.eval(v1(0.0)) == J.coeffs[0]);
        CHECK(std::abs(J.homogeneous(2).eval(v1(3.0)) - 9.0 * J.homogeneous(2).eval(v1(1.0))) < 1e-13);
    }
    SECTION("cpt at t = 0")
    {
        ModelProblem m = builtin_model("cpt");
        JetPolynomial J = reduced_subprincipal(m.f, SymbolFunction::zero(1, 2), m.k, m.base_point(0.0));
        CHECK(std::abs(J.eval(v2(2.0, 3.0)) - I * 6.0) < 1e-14);
    }
    SECTION("infinite order leaves p_s")
    {
        SymbolFunction ps = SymbolFunction::polynomial(1, 1, {{cd(0.5, 0.25), TCoef::pow(0), ex(4, {})}});
        JetPolynomial J = reduced_subprincipal(SymbolFunction::zero(1, 1), ps, VanishingOrder::inf(), pt(0, 0, 1, v1(0)));
        CHECK(J.eval(v1(3.0)) == cd(0.5, 0.25));
    }
    SECTION("order mismatch")
    {
        SymbolFunction f = SymbolFunction::polynomial(1, 1, {{I, TCoef::pow(0), ex(4, {{2, 1}})}});
        CHECK_THROWS_AS(reduced_subprincipal(f, SymbolFunction::zero(1, 1), VanishingOrder::finite(2), pt(0, 0, 1, v1(0))),
                        Error);
    }
}

TEST_CASE("extended subprincipal symbol", "[symbols]")
{
    const SymbolFunction zero = SymbolFunction::zero(1, 1);
    SECTION("degree-k model: no correction")
    {
        ModelProblem m = builtin_model("mizohata");
        JetPolynomial J = reduced_subprincipal(m.f, zero, m.k, m.base_point(0.2));
        for (double lam : {1e2, 1e3, 1e4})
            CHECK(std::abs(extended_subprincipal(m.f, zero, m.k, m.base_point(0.2), v1(0.8), lam) - J.eval(v1(0.8))) <
                  1e-12);
    }
    SECTION("cubic perturbation gives lambda^{-1/2} eta^3 and slope -1/k")
    {
        SymbolFunction f = SymbolFunction::polynomial(
            1, 1, {{-I, TCoef::pow(1), ex(4, {{2, 2}})}, {cd(1.0), TCoef::pow(0), ex(4, {{2, 3}})}});
        SymbolPoint w = pt(0.5, 0, 1, v1(0));
        JetPolynomial J = reduced_subprincipal(f, zero, VanishingOrder::finite(2), w);
        std::vector<double> lx, ly;
        for (double lam : {1e2, 1e3, 1e4}) {
            cd d = extended_subprincipal(f, zero, VanishingOrder::finite(2), w, v1(0.9), lam) - J.eval(v1(0.9));
            CHECK(std::abs(d - std::pow(lam, -0.5) * 0.729) < 1e-12);
            lx.push_back(std::log(lam));
            ly.push_back(std::log(std::abs(d)));
        }
        double slope = (ly[2] - ly[0]) / (lx[2] - lx[0]);
        CHECK(slope == Approx(-0.5).margin(0.05));
    }
}

TEST_CASE("blowup pullback", "[symbols]")
{
    SymbolFunction f = SymbolFunction::polynomial(1, 1, {{cd(1.0), TCoef::pow(0), ex(4, {{2, 1}})}});
    CHECK(blowup_pullback(f, VanishingOrder::finite(2), pt(0, 0, 4.0, v1(1.0))) == cd(0.5));
    ModelProblem m = builtin_model("cpt");
    SymbolPoint p = pt(0.3, 0.2, 1.0, v2(0.4, 0.6));
    CHECK(blowup_pullback(m.f, m.k, p) == m.f.eval(p));
    CHECK_THROWS_AS(blowup_pullback(f, VanishingOrder::finite(2), pt(0, 0, 0.0, v1(1.0))), Error);
}

TEST_CASE("blowup ray invariance for quasi-homogeneous symbols", "[symbols]")
{
    // first order in xi, vanishing to order 2 in eta
    SymbolFunction p = SymbolFunction::polynomial(1, 1, {{-I, TCoef::pow(1), ex(4, {{1, 1}, {2, 2}})}});
    std::vector<cd> vals;
    for (double lam : {10.0, 100.0, 1000.0}) {
        SymbolPoint q = pt(0.4, 0.0, lam * 1.5, v1(std::pow(lam, 0.5) * 0.8));
        vals.push_back(blowup_pullback(p, VanishingOrder::finite(2), q) / lam);
    }
    CHECK(std::abs(vals[1] - vals[0]) < 1e-10);
    CHECK(std::abs(vals[2] - vals[0]) < 1e-10);
}

TEST_CASE("builtin models", "[symbols]")
{
    ModelProblem miz = builtin_model("mizohata");
    CHECK(miz.nx == 1);
    CHECK(miz.ny == 1);
    CHECK(miz.k.k == 2);
    CHECK(miz.eta0[0] == 1.0);
    CHECK(miz.xi0[0] == 1.0);
    CHECK(miz.t_lo == -1.0);
    CHECK(miz.t_hi == 1.0);
    CHECK(diff_op_consistency(miz) < 1e-6);

    ModelProblem gen = builtin_model("cpt_gen", BuiltinParams{});
    REQUIRE(gen.F0.has_value());
    SymbolPoint p = pt(0.5, 0.0, 1.0, v2(0.0, 1.0), v2(2.0, 0.0));
    CHECK(std::abs(gen.F0->eval(p) - I * 3.0 * 0.5 * 4.0) < 1e-14); // 3 t y1^2
    CHECK(std::abs(gen.f.eval(p) - I * 0.125) < 1e-14);            // t^3 eta2^2
    CHECK(diff_op_consistency(gen) < 1e-6);
    CHECK(diff_op_consistency(builtin_model("cpt")) < 1e-6);

    CHECK_THROWS_AS(builtin_model("nope"), Error);
    BuiltinParams bad;
    bad.j = 0;
    CHECK_THROWS_AS(builtin_model("cpt_gen", bad), Error);
}

TEST_CASE("conjugate flip reverses Im f", "[symbols]")
{
    ModelProblem m = builtin_model("mizohata");
    ModelProblem c = conjugate_flip(m);
    SymbolPoint p = m.base_point(0.3);
    CHECK(c.f.eval(p) == std::conj(m.f.eval(p)));
    CHECK(diff_op_consistency(c) < 1e-6);
}
