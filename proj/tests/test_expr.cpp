#include "doctest.h"
#include "superflow/expr.hpp"

#include <cmath>

using namespace superflow;

TEST_CASE("expression parsing and evaluation") {
    expr::Expression e("x*(1-x)");
    CHECK(e(0.25, 0.0) == doctest::Approx(0.1875));
    CHECK(!e.time_dependent());

    expr::Expression f("exp(-t)*sin(x) + 2^2 / 2");
    CHECK(f(1.5707963267948966, 0.0) == doctest::Approx(3.0));
    CHECK(f.time_dependent());

    expr::Expression g("sqrt(x^2)");
    CHECK(g(3.0, 0.0) == doctest::Approx(3.0));

    CHECK_THROWS_AS(expr::Expression("x +* 2"), expr::ParseError);
    CHECK_THROWS_AS(expr::Expression("foo(x)"), expr::ParseError);
    CHECK_THROWS_AS(expr::Expression("(x"), expr::ParseError);
}

TEST_CASE("symbolic derivatives") {
    expr::Expression e("x^3 - 2*x");
    auto d = e.deriv_x();
    for (double x : {-1.0, 0.0, 0.7, 2.0}) CHECK(d(x, 0.0) == doctest::Approx(3 * x * x - 2));

    expr::Expression h("exp(-0.5*t)*sin(2*x)");
    auto hx = h.deriv_x();
    auto ht = h.deriv_t();
    CHECK(hx(0.3, 1.0) == doctest::Approx(std::exp(-0.5) * 2 * std::cos(0.6)));
    CHECK(ht(0.3, 1.0) == doctest::Approx(-0.5 * std::exp(-0.5) * std::sin(0.6)));

    expr::Expression q("x/(1+x)");
    auto qx = q.deriv_x();
    CHECK(qx(2.0, 0.0) == doctest::Approx(1.0 / 9.0));
}
