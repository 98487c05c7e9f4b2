#include <catch2/catch_amalgamated.hpp>

#include "pseudomode/multipoly.hpp"

using namespace pseudomode;
using Catch::Approx;

TEST_CASE("monomial table is graded and indexes round-trip", "[multipoly]")
{
    auto T = MonomialTable::get(3, 4);
    CHECK(T->size() == 35);
    CHECK(T->count_upto(0) == 1);
    CHECK(T->count_upto(1) == 4);
    for (int i = 0; i < T->size(); ++i) {
        std::vector<int> e(T->exponents(i), T->exponents(i) + 3);
        CHECK(T->index(e) == i);
        if (i > 0) CHECK(T->degree_of(i) >= T->degree_of(i - 1));
    }
    CHECK(T->index({5, 0, 0}) == -1);
}

TEST_CASE("truncated product drops monomials above the degree", "[multipoly]")
{
    auto x = CPoly::variable(2, 3, 0);
    auto y = CPoly::variable(2, 3, 1, cd(2.0));
    auto p = (x * y).pow(2); // (x (2 + y))^2 truncated at degree 3
    CHECK(p.coeff({2, 0}) == cd(4.0));
    CHECK(p.coeff({2, 1}) == cd(4.0));
    CHECK(p.coeff({2, 2}) == cd(0.0));
    CHECK(p.eval(std::vector<double>{0.1, 0.2}).real() == Approx(0.04 + 0.008));
}

TEST_CASE("derivative and evaluation agree with the closed form", "[multipoly]")
{
    CPoly p(2, 4);
    p[p.table()->index({3, 1})] = cd(1.0, 2.0);
    p[p.table()->index({0, 2})] = cd(-3.0);
    CPoly dx = p.derivative(0);
    CHECK(dx.coeff({2, 1}) == cd(3.0, 6.0));
    CHECK(dx.coeff({0, 2}) == cd(0.0));
    std::vector<double> pt{0.5, -1.5};
    cd expect = cd(1.0, 2.0) * 0.125 * -1.5 - 3.0 * 2.25;
    CHECK(std::abs(p.eval(pt) - expect) < 1e-14);
    CHECK(p.regraded(2).coeff({3, 1}) == cd(0.0));
    CHECK(p.regraded(6).coeff({3, 1}) == cd(1.0, 2.0));
}
