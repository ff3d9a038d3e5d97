#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "superflow/models.hpp"
#include "superflow/pde.hpp"
#include "superflow/spectral.hpp"

using namespace superflow;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("half Laplacian on (0,pi): sine ground state") {
    auto spec = make_dirichlet_box("0", "1", kPi);
    auto triple = principal_eigenpair(spec.quadruple, 2001);

    CHECK(triple.lambda_c == doctest::Approx(-0.5).scale(1).epsilon(1e-3));
    CHECK(triple.residual < 1e-8);
    CHECK(triple.criticality == Criticality::ProductCritical);

    // shape against sin after max-normalization
    const double mx = triple.phi_c.max();
    double err = 0.0;
    for (std::size_t i = 0; i < triple.phi_c.size(); ++i)
        err = std::max(err,
                       std::abs(triple.phi_c[i] / mx - std::sin(triple.phi_c.node(i))));
    CHECK(err < 1e-3);

    // joint normalization <phi phi_tilde> = 1
    CHECK(inner_product(triple.phi_c, triple.phi_tilde_c) == doctest::Approx(1.0).epsilon(1e-9));

    // eigenvalue table is monotone over the nested truncations
    for (std::size_t k = 1; k < triple.table.size(); ++k)
        CHECK(triple.table[k].lambda >= triple.table[k - 1].lambda - 1e-10);
}

TEST_CASE("constant potential shifts the eigenvalue; dense oracle agrees") {
    auto spec = make_dirichlet_box("0.7", "1", kPi);
    const Interval w{0.0, kPi};
    auto D = discretize(spec.quadruple.L, &spec.quadruple.beta, w, 200);

    const double top = oracles::kth_top_eigenvalue(D.matrix);
    auto pair = principal_interior_eigenpair(D.matrix);
    CHECK(pair.lambda == doctest::Approx(top).scale(1).epsilon(1e-9));
    CHECK(pair.lambda == doctest::Approx(0.7 - 0.5).scale(1).epsilon(1e-3));

    // transpose iteration reproduces the same eigenvalue
    auto pair_t = principal_interior_eigenpair(D.matrix.transposed());
    CHECK(std::abs(pair.lambda - pair_t.lambda) <= 1e-10 * std::max(1.0, std::abs(pair.lambda)));
}

TEST_CASE("Wright-Fisher principal eigenvalue and ground states") {
    auto spec = make_wright_fisher(2.0);
    auto triple = principal_eigenpair(spec.quadruple, 2001);
    CHECK(triple.lambda_c > 0.95);
    CHECK(triple.lambda_c < 1.05);
    CHECK(triple.criticality == Criticality::ProductCritical);
    CHECK(triple.residual < 1e-6);
    CHECK(triple.sup_residual < 1e-9);

    // phi proportional to x(1-x), phi_tilde constant
    const GridFunction& phi = triple.phi_c;
    const double c = phi.interpolate(0.5) / 0.25;
    for (double x : {0.2, 0.35, 0.65, 0.9})
        CHECK(phi.interpolate(x) == doctest::Approx(c * x * (1 - x)).epsilon(1e-3));
    const GridFunction& pt = triple.phi_tilde_c;
    CHECK(pt.min_interior() / pt.max() > 0.98);

    // gamma = 0.5 flips the sign
    auto half = make_wright_fisher(0.5);
    auto triple_half = principal_eigenpair(half.quadruple, 2001);
    CHECK(triple_half.lambda_c == doctest::Approx(-0.5).scale(1).epsilon(0.05));

    SUBCASE("conjugation residual tracks refinement for the numeric pair") {
        double res[2];
        std::size_t sizes[2] = {501, 1001};
        for (int k = 0; k < 2; ++k) {
            auto tr = principal_eigenpair(spec.quadruple, sizes[k]);
            auto u = GridFunction::sample({0, 1}, sizes[k],
                                          [](double x) { return 1 + 0.5 * std::sin(3 * x); },
                                          BoundaryTag::None);
            res[k] = conjugation_check(spec.quadruple, tr.phi_c, tr.lambda_c, u);
        }
        // near the degenerate edge the pointwise identity degrades to first
        // order, so the max-norm ratio sits between 2 and 4
        CHECK(res[0] / res[1] > 1.6);
        CHECK(res[0] / res[1] < 6.0);
    }

    SUBCASE("grid refinement is second order (Richardson consistency)") {
        double l1 = principal_eigenpair(spec.quadruple, 251).lambda_c;
        double l2 = principal_eigenpair(spec.quadruple, 501).lambda_c;
        double l3 = principal_eigenpair(spec.quadruple, 1001).lambda_c;
        const double ratio = (l1 - l2) / (l2 - l3);
        CHECK(ratio > 2.5);
        CHECK(ratio < 6.0);
    }
}

TEST_CASE("criticality classification") {
    SUBCASE("whole-line constant model is critical but not product-critical") {
        auto spec = make_super_bm(1.0, 1.0);
        auto triple = principal_eigenpair(spec.quadruple, 801);
        CHECK(triple.lambda_c == doctest::Approx(1.0).scale(1).epsilon(0.05));
        CHECK(triple.criticality == Criticality::CriticalNonProduct);
        // the max-normalized product integral grows like the window
        CHECK(triple.table.back().phi_phitilde_integral >
              1.8 * triple.table[triple.table.size() - 2].phi_phitilde_integral);
    }

    SUBCASE("fewer than three truncations is an error") {
        std::vector<TruncationRow> rows(2);
        CHECK_THROWS_AS(classify_criticality(rows, false), InsufficientDataError);
    }

    SUBCASE("bounded domains are always product-critical") {
        std::vector<TruncationRow> rows(3);
        rows[0].phi_phitilde_integral = 1;
        rows[1].phi_phitilde_integral = 2;
        rows[2].phi_phitilde_integral = 4;
        CHECK(classify_criticality(rows, true) == Criticality::ProductCritical);
        CHECK(classify_criticality(rows, false) == Criticality::CriticalNonProduct);
    }
}

TEST_CASE("Feynman-Kac growth-rate estimates") {
    SUBCASE("zero potential on a wide window") {
        BranchingQuadruple Q;
        Q.L.a = Coefficient::constant(1.0);
        Q.L.b = Coefficient::constant(0.0);
        Q.L.domain = Domain1D::bounded_domain(-40.0, 40.0);
        Q.beta = Coefficient::constant(0.0);
        Q.alpha = Coefficient::constant(1.0);
        FeynmanKacOptions opts;
        opts.paths = 4000;
        opts.dt = 1e-2;
        opts.seed = 11;
        auto est = lambda_feynman_kac(Q, 0.0, {-40, 40}, 2.0, opts);
        CHECK(std::abs(est.lambda_hat) < 3.0 * std::max(est.std_error, 1e-6) + 1e-9);
    }

    SUBCASE("constant potential with the reflecting override is exact") {
        BranchingQuadruple Q;
        Q.L.a = Coefficient::constant(1.0);
        Q.L.b = Coefficient::constant(0.0);
        Q.L.domain = Domain1D::bounded_domain(0.0, 1.0);
        Q.beta = Coefficient::constant(0.8);
        Q.alpha = Coefficient::constant(1.0);
        FeynmanKacOptions opts;
        opts.paths = 500;
        opts.dt = 1e-2;
        opts.seed = 3;
        opts.boundary = PathBoundary::Reflect;
        auto est = lambda_feynman_kac(Q, 0.5, {0, 1}, 1.5, opts);
        CHECK(est.lambda_hat == doctest::Approx(0.8).epsilon(1e-9));
        CHECK(est.surviving == 500);
    }

    SUBCASE("Wright-Fisher window estimate matches the Dirichlet value") {
        auto spec = make_wright_fisher(2.0);
        const Interval A{0.05, 0.95};

        // deterministic oracle: the functional solves u_t = (L+beta)u on A
        auto ones = GridFunction::constant(A, 801, 1.0, BoundaryTag::DirichletZero);
        ones.apply_dirichlet();
        const double t = 3.0;
        auto u = expectation_semigroup(spec.quadruple, ones, t, 5e-4);
        const double pde_value = std::log(u.interpolate(0.5)) / t;

        FeynmanKacOptions opts;
        opts.paths = 60000;
        opts.dt = 1e-3;
        opts.seed = 17;
        auto est = lambda_feynman_kac(spec.quadruple, 0.5, A, t, opts);
        CHECK(!est.all_exited);
        CHECK(std::abs(est.lambda_hat - pde_value) <= 3.0 * est.std_error + 0.01);

        // the window value stays below lambda_c of the full domain
        auto dirichlet_on_A = principal_eigenpair(spec.quadruple, 801, {A});
        CHECK(dirichlet_on_A.lambda_c < 1.0);
        CHECK(est.lambda_hat < 1.05);
    }
}

TEST_CASE("local growth rate approaches lambda_c") {
    SUBCASE("negative potential model decreases toward the principal eigenvalue") {
        auto spec = make_dirichlet_box("-1", "1", kPi);
        // analytic eigen-expansion oracle: lambda_k = -1 - k^2/2
        const Interval B{0.25 * kPi, 0.75 * kPi};
        Measure mu = Measure::point(0.5 * kPi, 1.0);
        auto res = local_growth_rate(spec.quadruple, mu, B, {1, 2, 4, 8, 16}, 801, 1e-3);

        std::vector<double> oracle_rates;
        for (double t : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            double s = 0.0;
            for (int k = 1; k <= 300; ++k) {
                const double ck =
                    2.0 / kPi * (std::cos(k * B.lo) - std::cos(k * B.hi)) / double(k);
                s += std::exp((-1.0 - 0.5 * k * k) * t) * ck * std::sin(k * kPi / 2.0);
            }
            oracle_rates.push_back(std::log(s) / t);
        }
        for (std::size_t j = 0; j < oracle_rates.size(); ++j)
            CHECK(res.points[j].rate ==
                  doctest::Approx(oracle_rates[j]).scale(1).epsilon(5e-3));
        CHECK(res.points.back().rate == doctest::Approx(-1.5).scale(1).epsilon(0.05));
    }

    SUBCASE("Wright-Fisher rate lands near 1 by t = 10") {
        auto spec = make_wright_fisher(2.0);
        Measure mu = Measure::point(0.5, 1.0);
        auto res = local_growth_rate(spec.quadruple, mu, {0.25, 0.75}, {2, 5, 10}, 1001, 1e-3);
        CHECK(std::abs(res.points.back().rate - 1.0) < 0.1);
    }

    SUBCASE("adjoint-ground-state initial measure gives the exact rate at all times") {
        auto spec = make_dirichlet_box("0.2", "1", kPi);
        auto triple = principal_eigenpair(spec.quadruple, 801);
        GridFunction density = triple.phi_tilde_c;
        density.scale(1.0 / density.integrate());  // unit-mass eigen initial data
        Measure mu = Measure::density(density);
        auto res = local_growth_rate(spec.quadruple, mu, {0.0, kPi}, {1, 2, 4}, 801, 1e-3);
        for (const auto& p : res.points)
            CHECK(p.rate == doctest::Approx(triple.lambda_c).scale(1).epsilon(5e-3));
    }
}
