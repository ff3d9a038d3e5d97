#pragma once

#include <functional>
#include <optional>

#include "superflow/coefficient.hpp"
#include "superflow/domain.hpp"
#include "superflow/grid.hpp"
#include "superflow/tridiag.hpp"

namespace superflow {

// L = 1/2 d/dx( a(x,t) d/dx ) + b(x,t) d/dx on a 1-D domain
struct EllipticOperator {
    Coefficient a;
    Coefficient b;
    Domain1D domain;

    bool time_dependent() const { return a.time_dependent() || b.time_dependent(); }
};

// The model (L, beta, alpha; D); possibly time-dependent after an H-transform.
struct BranchingQuadruple {
    EllipticOperator L;
    Coefficient beta;
    Coefficient alpha;

    const Domain1D& domain() const { return L.domain; }
    bool time_dependent() const {
        return L.time_dependent() || beta.time_dependent() || alpha.time_dependent();
    }
};

// Positive space-time weight H(x,t) with first and second spatial derivatives
// and a time derivative. Grid-backed ground-state weights evaluate L H on the
// grid stencil itself so transformed coefficients agree with the discretized
// operator node for node.
struct SpaceTimeWeight {
    std::function<double(double, double)> value;
    std::function<double(double, double)> grad_x;
    std::function<double(double, double)> dd_x;
    std::function<double(double, double)> d_t;

    // when set, H(x,t) = exp(-lambda*t) * phi(x) with phi given on a grid;
    // used for stencil-exact transforms
    std::optional<GridFunction> grid_phi;
    double decay_rate = 0.0;

    static SpaceTimeWeight one();
    // H(x,t) = exp(-lambda*t) * phi(x), phi sampled on a grid (derivatives by
    // centered differences on the grid)
    static SpaceTimeWeight ground_state(const GridFunction& phi, double lambda);
    // analytic H(x,t) = exp(-lambda*t) * phi(x) given as an expression in x
    static SpaceTimeWeight ground_state(const expr::Expression& phi, double lambda);
    // fully analytic space-time expression
    static SpaceTimeWeight from_expression(const expr::Expression& h);
};

// dimension of the interior block for an n-node grid with Dirichlet rows
struct DiscretizedOperator {
    Interval window;
    std::size_t nodes = 0;
    double spacing = 0.0;
    Tridiagonal matrix;  // interior rows only (nodes-2)

    double node(std::size_t interior_index) const {
        return window.lo + double(interior_index + 1) * spacing;
    }
};

// Second-order centered discretization of L (+ beta) on n uniform nodes over
// window; the matrix acts on interior node values with zero boundary data.
DiscretizedOperator discretize(const EllipticOperator& L, const Coefficient* beta,
                               const Interval& window, std::size_t nodes, double t = 0.0);

// (1/2)(a u')' + b u' by centered differences on u's grid. Boundary rows are 0
// for Dirichlet-tagged u and one-sided second-order stencils otherwise.
GridFunction apply_operator(const EllipticOperator& L, const GridFunction& u, double t = 0.0);

// Doob h-transform of the motion: same a, drift b + a h'/h, no zeroth-order
// part. h must be positive on the interior.
EllipticOperator h_transform_operator(const EllipticOperator& L, const GridFunction& h);
EllipticOperator h_transform_operator(const EllipticOperator& L, const Coefficient& h);

// Space-time H-transform of the whole quadruple:
//   (L + a H_x/H grad, beta + LH/H + H_t/H, alpha*H; D)
BranchingQuadruple H_transform_quadruple(const BranchingQuadruple& Q, const SpaceTimeWeight& H);

// Discrete formal adjoint of L + beta: exact transpose of the discretization.
DiscretizedOperator adjoint_operator(const EllipticOperator& L, const Coefficient& beta,
                                     const Interval& window, std::size_t nodes, double t = 0.0);

// max-norm residual over interior nodes of
//   L0^phi(u) - phi^{-1} (L + beta - lambda)(phi u)
double conjugation_check(const BranchingQuadruple& Q, const GridFunction& phi, double lambda,
                         const GridFunction& u);

}  // namespace superflow
