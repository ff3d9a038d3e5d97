#include "doctest.h"

#include <cmath>

#include "superflow/operators.hpp"

using namespace superflow;

namespace {

EllipticOperator half_laplacian(double l, double r) {
    EllipticOperator L;
    L.a = Coefficient::constant(1.0);
    L.b = Coefficient::constant(0.0);
    L.domain = Domain1D::bounded_domain(l, r);
    return L;
}

EllipticOperator wright_fisher_motion() {
    EllipticOperator L;
    L.a = Coefficient::from_expression("x*(1-x)");
    L.b = Coefficient::from_expression("x-0.5");
    L.domain = Domain1D::bounded_domain(0.0, 1.0);
    return L;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("apply_operator reproduces second derivatives") {
    auto L = half_laplacian(0.0, 1.0);
    const std::size_t n = 201;
    auto u = GridFunction::sample({0, 1}, n, [](double x) { return x * x; }, BoundaryTag::None);
    auto Lu = apply_operator(L, u);
    for (std::size_t i = 1; i + 1 < n; ++i) CHECK(Lu[i] == doctest::Approx(1.0).epsilon(1e-8));

    EllipticOperator Ld = L;
    Ld.b = Coefficient::constant(1.0);
    auto v = GridFunction::sample({0, 1}, n, [](double x) { return std::sin(x); },
                                  BoundaryTag::None);
    auto Lv = apply_operator(Ld, v);
    const double h = v.spacing();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = v.node(i);
        CHECK(Lv[i] == doctest::Approx(-0.5 * std::sin(x) + std::cos(x)).scale(1).epsilon(2 * h * h));
    }
}

TEST_CASE("apply_operator on the degenerate Wright-Fisher coefficient") {
    // oracle: differentiate u = x(1-x) symbolically through the divergence form
    auto L = wright_fisher_motion();
    expr::Expression u_expr("x*(1-x)");
    expr::Expression a_expr("x*(1-x)"), b_expr("x-0.5");
    auto ux = u_expr.deriv_x();
    auto flux = expr::Expression(
        expr::Expression("x*(1-x)").text() + "*(" + ux.text() + ")");
    // (1/2)(a u')' + b u'
    expr::Expression au(a_expr.text() + "*(" + ux.text() + ")");
    auto aux = au.deriv_x();
    auto oracle = [&](double x) { return 0.5 * aux(x, 0.0) + b_expr(x, 0.0) * ux(x, 0.0); };

    const std::size_t n = 401;
    auto u = GridFunction::sample({0, 1}, n, [&](double x) { return u_expr(x, 0.0); });
    auto Lu = apply_operator(L, u);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = u.node(i);
        CHECK(oracle(x) == doctest::Approx(-x * (1 - x)).epsilon(1e-12));  // oracle sanity
        CHECK(Lu[i] == doctest::Approx(-x * (1 - x)).scale(1).epsilon(2 * u.spacing() * u.spacing()));
    }
}

TEST_CASE("h-transform drift and positivity error") {
    auto L = half_laplacian(0.0, 1.0);
    const std::size_t n = 101;

    SUBCASE("constant h leaves the operator unchanged") {
        auto h = GridFunction::constant({0, 1}, n, 3.0);
        auto Lh = h_transform_operator(L, h);
        for (double x : {0.1, 0.5, 0.9}) CHECK(Lh.b(x, 0.0) == doctest::Approx(0.0));
    }

    SUBCASE("h = e^x adds unit drift") {
        auto h = GridFunction::sample({0, 1}, n, [](double x) { return std::exp(x); },
                                      BoundaryTag::None);
        auto Lh = h_transform_operator(L, h);
        for (double x : {0.2, 0.5, 0.8})
            CHECK(Lh.b(x, 0.0) == doctest::Approx(1.0).epsilon(1e-3));
        auto Lc = h_transform_operator(L, Coefficient::from_expression("exp(x)"));
        for (double x : {0.2, 0.5, 0.8}) CHECK(Lc.b(x, 0.0) == doctest::Approx(1.0));
    }

    SUBCASE("nonpositive h is rejected") {
        auto h = GridFunction::sample({0, 1}, n, [](double x) { return x - 0.5; },
                                      BoundaryTag::None);
        CHECK_THROWS_AS(h_transform_operator(L, h), PositivityError);
    }
}

TEST_CASE("H-transform of the whole quadruple") {
    BranchingQuadruple Q;
    Q.L = half_laplacian(0.0, kPi);
    Q.beta = Coefficient::constant(1.0);
    Q.alpha = Coefficient::constant(2.0);

    SUBCASE("identity weight keeps all coefficients") {
        auto QH = H_transform_quadruple(Q, SpaceTimeWeight::one());
        for (double x : {0.3, 1.0, 2.8}) {
            CHECK(QH.L.b(x, 0.7) == doctest::Approx(0.0));
            CHECK(QH.beta(x, 0.7) == doctest::Approx(1.0));
            CHECK(QH.alpha(x, 0.7) == doctest::Approx(2.0));
        }
    }

    SUBCASE("the analytic ground-state weight zeroes beta") {
        const double lambda = 1.0 - 0.5;  // beta - 1/2 on (0, pi)
        auto H = SpaceTimeWeight::ground_state(expr::Expression("sin(x)"), lambda);
        auto QH = H_transform_quadruple(Q, H);
        for (double x : {0.4, 1.2, 2.0})
            for (double t : {0.0, 1.0}) CHECK(std::abs(QH.beta(x, t)) < 1e-10);
        // alpha component is alpha * phi * exp(-lambda t)
        CHECK(QH.alpha(1.0, 2.0) ==
              doctest::Approx(2.0 * std::sin(1.0) * std::exp(-lambda * 2.0)));
    }

    SUBCASE("transforms compose multiplicatively") {
        auto H1 = SpaceTimeWeight::from_expression(expr::Expression("exp(-0.3*t)*(1+x)"));
        auto H2 = SpaceTimeWeight::from_expression(expr::Expression("exp(0.1*t*x)+1"));
        auto H12 = SpaceTimeWeight::from_expression(
            expr::Expression("(exp(-0.3*t)*(1+x))*(exp(0.1*t*x)+1)"));
        auto A = H_transform_quadruple(H_transform_quadruple(Q, H1), H2);
        auto B = H_transform_quadruple(Q, H12);
        for (double x : {0.5, 1.5, 2.5})
            for (double t : {0.0, 0.8}) {
                CHECK(A.L.b(x, t) == doctest::Approx(B.L.b(x, t)).epsilon(1e-7));
                CHECK(A.beta(x, t) == doctest::Approx(B.beta(x, t)).epsilon(1e-7));
                CHECK(A.alpha(x, t) == doctest::Approx(B.alpha(x, t)).epsilon(1e-10));
            }
    }

    SUBCASE("nonpositive weight is rejected") {
        auto H = SpaceTimeWeight::from_expression(expr::Expression("x-1"));
        CHECK_THROWS_AS(H_transform_quadruple(Q, H), PositivityError);
    }
}

TEST_CASE("discrete adjoint is the exact transpose") {
    const Interval w{0.0, 1.0};
    const std::size_t n = 64;

    EllipticOperator L;
    L.a = Coefficient::from_expression("1+0.5*sin(3*x)");
    L.b = Coefficient::from_expression("cos(2*x)");
    L.domain = Domain1D::bounded_domain(0.0, 1.0);
    Coefficient beta = Coefficient::from_expression("x");

    auto D = discretize(L, &beta, w, n);
    auto A = adjoint_operator(L, beta, w, n);
    for (std::size_t i = 0; i < D.matrix.size(); ++i) {
        CHECK(A.matrix.diag[i] == D.matrix.diag[i]);
        if (i > 0) CHECK(A.matrix.lower[i] == D.matrix.upper[i - 1]);
        if (i + 1 < D.matrix.size()) CHECK(A.matrix.upper[i] == D.matrix.lower[i + 1]);
    }

    // symmetric operator: the discretization equals its transpose
    auto S = discretize(half_laplacian(0, 1), nullptr, w, n);
    auto St = S.matrix.transposed();
    for (std::size_t i = 0; i < S.matrix.size(); ++i) {
        CHECK(S.matrix.diag[i] == St.diag[i]);
        CHECK(S.matrix.lower[i] == St.lower[i]);
        CHECK(S.matrix.upper[i] == St.upper[i]);
    }
}

TEST_CASE("Wright-Fisher adjoint matches the displayed operator") {
    // transpose of the discretization of L + 1 acts like
    // (1/2) x(1-x) v'' + (1-2x) v' on smooth interior data
    auto L = wright_fisher_motion();
    Coefficient one = Coefficient::constant(1.0);
    const std::size_t n = 801;
    const Interval w{0.0, 1.0};
    auto A = adjoint_operator(L, one, w, n);

    auto v = GridFunction::sample(w, n, [](double x) { return x * x * (1 - x) * (1 - x); });
    std::vector<double> vi(n - 2);
    for (std::size_t i = 0; i < vi.size(); ++i) vi[i] = v[i + 1];
    auto Av = A.matrix.apply(vi);
    for (std::size_t i = 1; i + 1 < vi.size(); ++i) {
        const double x = v.node(i + 1);
        const double vxx = 2 - 12 * x + 12 * x * x;
        const double vx = 2 * x - 6 * x * x + 4 * x * x * x;
        const double expected = 0.5 * x * (1 - x) * vxx + (1 - 2 * x) * vx;
        CHECK(Av[i] == doctest::Approx(expected).scale(1).epsilon(5e-4));
    }
}

TEST_CASE("conjugation identity") {
    BranchingQuadruple Q;
    Q.L = half_laplacian(0.0, kPi);
    Q.beta = Coefficient::constant(0.0);
    Q.alpha = Coefficient::constant(1.0);

    SUBCASE("discrete-exact eigenpair and constant test function vanish") {
        const std::size_t n = 101;
        auto phi = GridFunction::sample({0, kPi}, n, [](double x) { return std::sin(x); });
        const double h = phi.spacing();
        const double lambda_h = -2.0 * std::pow(std::sin(0.5 * h), 2) / (h * h);
        auto u = GridFunction::constant({0, kPi}, n, 1.0);
        CHECK(conjugation_check(Q, phi, lambda_h, u) < 1e-11);
    }

    SUBCASE("residual decays at second order under refinement") {
        auto u_fn = [](double x) { return std::exp(-x) * (1 + 0.3 * std::cos(2 * x)); };
        double res[2];
        std::size_t sizes[2] = {201, 401};
        for (int k = 0; k < 2; ++k) {
            auto phi =
                GridFunction::sample({0, kPi}, sizes[k], [](double x) { return std::sin(x); });
            auto u = GridFunction::sample({0, kPi}, sizes[k], u_fn, BoundaryTag::None);
            res[k] = conjugation_check(Q, phi, -0.5, u);
        }
        CHECK(res[0] / res[1] > 2.8);  // second order: ratio near 4
        CHECK(res[0] / res[1] < 5.5);
    }
}
