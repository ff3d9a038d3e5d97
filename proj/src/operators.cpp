#include "superflow/operators.hpp"

#include <cmath>
#include <memory>

namespace superflow {

namespace {

// ratio table r_i on the nodes of g, linearly interpolated, end values copied
// from their interior neighbors
std::function<double(double, double)> interp_of(std::shared_ptr<GridFunction> g) {
    return [g](double x, double) {
        if (x <= g->node(1)) return (*g)[1];
        if (x >= g->node(g->size() - 2)) return (*g)[g->size() - 2];
        return g->interpolate(x);
    };
}

void require_positive_weight(const SpaceTimeWeight& H, const Interval& window) {
    const int probes = 257;
    for (double t : {0.0, 0.5, 2.0}) {
        for (int i = 1; i + 1 < probes; ++i) {
            double x = window.lo + window.width() * double(i) / double(probes - 1);
            if (!(H.value(x, t) > 0.0))
                throw PositivityError("space-time weight is not positive on the domain");
        }
    }
}

}  // namespace

SpaceTimeWeight SpaceTimeWeight::one() {
    SpaceTimeWeight H;
    H.value = [](double, double) { return 1.0; };
    H.grad_x = [](double, double) { return 0.0; };
    H.dd_x = [](double, double) { return 0.0; };
    H.d_t = [](double, double) { return 0.0; };
    return H;
}

SpaceTimeWeight SpaceTimeWeight::ground_state(const GridFunction& phi, double lambda) {
    if (phi.min_interior() <= 0.0)
        throw PositivityError("ground-state weight needs a positive function");
    auto p = std::make_shared<GridFunction>(phi);
    const double h = phi.spacing();
    const std::size_t n = phi.size();

    std::vector<double> d1(n), d2(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d1[i] = ((*p)[i + 1] - (*p)[i - 1]) / (2.0 * h);
        d2[i] = ((*p)[i + 1] - 2.0 * (*p)[i] + (*p)[i - 1]) / (h * h);
    }
    d1[0] = d1[1];
    d1[n - 1] = d1[n - 2];
    d2[0] = d2[1];
    d2[n - 1] = d2[n - 2];
    auto g1 = std::make_shared<GridFunction>(phi.domain(), std::move(d1), BoundaryTag::None);
    auto g2 = std::make_shared<GridFunction>(phi.domain(), std::move(d2), BoundaryTag::None);

    SpaceTimeWeight H;
    H.value = [p, lambda](double x, double t) { return std::exp(-lambda * t) * p->interpolate(x); };
    H.grad_x = [g1, lambda](double x, double t) {
        return std::exp(-lambda * t) * g1->interpolate(x);
    };
    H.dd_x = [g2, lambda](double x, double t) { return std::exp(-lambda * t) * g2->interpolate(x); };
    H.d_t = [p, lambda](double x, double t) {
        return -lambda * std::exp(-lambda * t) * p->interpolate(x);
    };
    H.grid_phi = phi;
    H.decay_rate = lambda;
    return H;
}

SpaceTimeWeight SpaceTimeWeight::ground_state(const expr::Expression& phi, double lambda) {
    auto p = phi;
    auto p1 = phi.deriv_x();
    auto p2 = p1.deriv_x();
    SpaceTimeWeight H;
    H.value = [p, lambda](double x, double t) { return std::exp(-lambda * t) * p(x); };
    H.grad_x = [p1, lambda](double x, double t) { return std::exp(-lambda * t) * p1(x); };
    H.dd_x = [p2, lambda](double x, double t) { return std::exp(-lambda * t) * p2(x); };
    H.d_t = [p, lambda](double x, double t) { return -lambda * std::exp(-lambda * t) * p(x); };
    H.decay_rate = lambda;
    return H;
}

SpaceTimeWeight SpaceTimeWeight::from_expression(const expr::Expression& h) {
    auto hx = h.deriv_x();
    auto hxx = hx.deriv_x();
    auto ht = h.deriv_t();
    SpaceTimeWeight H;
    H.value = [h](double x, double t) { return h(x, t); };
    H.grad_x = [hx](double x, double t) { return hx(x, t); };
    H.dd_x = [hxx](double x, double t) { return hxx(x, t); };
    H.d_t = [ht](double x, double t) { return ht(x, t); };
    return H;
}

DiscretizedOperator discretize(const EllipticOperator& L, const Coefficient* beta,
                               const Interval& window, std::size_t nodes, double t) {
    if (nodes < 5) throw DomainError("discretize: need at least 5 nodes");
    if (window.lo < L.domain.left || window.hi > L.domain.right)
        throw DomainError("discretize: window is not inside the operator domain");
    DiscretizedOperator D;
    D.window = window;
    D.nodes = nodes;
    D.spacing = window.width() / double(nodes - 1);
    const double h = D.spacing;
    const std::size_t n = nodes - 2;
    D.matrix = Tridiagonal::zeros(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = window.lo + double(j + 1) * h;
        const double ap = L.a(x + 0.5 * h, t);
        const double am = L.a(x - 0.5 * h, t);
        const double bx = L.b(x, t);
        D.matrix.lower[j] = 0.5 * am / (h * h) - bx / (2.0 * h);
        D.matrix.diag[j] = -0.5 * (ap + am) / (h * h) + (beta ? (*beta)(x, t) : 0.0);
        D.matrix.upper[j] = 0.5 * ap / (h * h) + bx / (2.0 * h);
    }
    D.matrix.lower[0] = 0.0;
    D.matrix.upper[n - 1] = 0.0;
    return D;
}

GridFunction apply_operator(const EllipticOperator& L, const GridFunction& u, double t) {
    const Interval& w = u.domain();
    if (w.lo < L.domain.left || w.hi > L.domain.right)
        throw DomainError("apply_operator: grid is not inside the operator domain");
    const double h = u.spacing();
    const std::size_t n = u.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = u.node(i);
        const double ap = L.a(x + 0.5 * h, t);
        const double am = L.a(x - 0.5 * h, t);
        const double flux = (ap * (u[i + 1] - u[i]) - am * (u[i] - u[i - 1])) / (h * h);
        out[i] = 0.5 * flux + L.b(x, t) * (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    if (u.boundary() == BoundaryTag::None && n >= 4) {
        // expanded form 1/2 a u'' + (1/2 a' + b) u' with one-sided stencils
        auto edge = [&](std::size_t i, int dir) {
            const double x = u.node(i);
            const double d1 =
                dir * (-3.0 * u[i] + 4.0 * u[i + dir] - u[i + 2 * dir]) / (2.0 * h);
            const double d2 =
                (2.0 * u[i] - 5.0 * u[i + dir] + 4.0 * u[i + 2 * dir] - u[i + 3 * dir]) / (h * h);
            const double ax = L.a(x, t);
            const double dax = L.a.deriv_x(x, t, h);
            out[i] = 0.5 * ax * d2 + (0.5 * dax + L.b(x, t)) * d1;
        };
        edge(0, +1);
        edge(n - 1, -1);
    }
    return GridFunction(w, std::move(out), u.boundary());
}

EllipticOperator h_transform_operator(const EllipticOperator& L, const GridFunction& h) {
    if (h.min_interior() <= 0.0)
        throw PositivityError("h-transform needs h > 0 on the interior");
    const double dx = h.spacing();
    const std::size_t n = h.size();
    std::vector<double> ratio(n);
    for (std::size_t i = 1; i + 1 < n; ++i)
        ratio[i] = (h[i + 1] - h[i - 1]) / (2.0 * dx * h[i]);
    ratio[0] = ratio[1];
    ratio[n - 1] = ratio[n - 2];
    auto r = std::make_shared<GridFunction>(h.domain(), std::move(ratio), BoundaryTag::None);
    auto rf = interp_of(r);

    EllipticOperator out;
    out.a = L.a;
    out.domain = L.domain;
    const Coefficient a = L.a;
    const Coefficient b = L.b;
    out.b = Coefficient::space_time(
        [a, b, rf](double x, double t) { return b(x, t) + a(x, t) * rf(x, t); },
        a.time_dependent() || b.time_dependent());
    return out;
}

EllipticOperator h_transform_operator(const EllipticOperator& L, const Coefficient& h) {
    const Interval& w = L.domain.final_truncation();
    for (int i = 1; i < 256; ++i) {
        double x = w.lo + w.width() * double(i) / 256.0;
        if (!(h(x, 0.0) > 0.0)) throw PositivityError("h-transform needs h > 0 on the interior");
    }
    EllipticOperator out;
    out.a = L.a;
    out.domain = L.domain;
    const Coefficient a = L.a;
    const Coefficient b = L.b;
    const Coefficient hc = h;
    out.b = Coefficient::space_time(
        [a, b, hc](double x, double t) {
            return b(x, t) + a(x, t) * hc.deriv_x(x, t) / hc(x, t);
        },
        a.time_dependent() || b.time_dependent() || h.time_dependent());
    return out;
}

BranchingQuadruple H_transform_quadruple(const BranchingQuadruple& Q, const SpaceTimeWeight& H) {
    const Interval& w = Q.domain().final_truncation();
    require_positive_weight(H, w);

    BranchingQuadruple out;
    out.L.domain = Q.L.domain;
    out.L.a = Q.L.a;

    const Coefficient a = Q.L.a;
    const Coefficient b = Q.L.b;
    const Coefficient beta = Q.beta;
    const Coefficient alpha = Q.alpha;

    auto Hval = H.value;
    auto Hx = H.grad_x;
    out.L.b = Coefficient::space_time(
        [a, b, Hval, Hx](double x, double t) {
            return b(x, t) + a(x, t) * Hx(x, t) / Hval(x, t);
        },
        true);

    if (H.grid_phi) {
        // stencil-exact route: L phi evaluated with the same flux stencil the
        // discretized operator uses, so the transformed beta at the nodes is
        // exactly the eigen-residual ratio
        const GridFunction& phi = *H.grid_phi;
        GridFunction Lphi = apply_operator(Q.L, phi, 0.0);
        std::vector<double> ratio(phi.size(), 0.0);
        for (std::size_t i = 1; i + 1 < phi.size(); ++i) ratio[i] = Lphi[i] / phi[i];
        ratio[0] = ratio[1];
        ratio[phi.size() - 1] = ratio[phi.size() - 2];
        auto r = std::make_shared<GridFunction>(phi.domain(), std::move(ratio), BoundaryTag::None);
        auto rf = interp_of(r);
        const double lambda = H.decay_rate;
        out.beta = Coefficient::space_time(
            [beta, rf, lambda](double x, double t) { return beta(x, t) + rf(x, t) - lambda; },
            beta.time_dependent());
    } else {
        auto Hxx = H.dd_x;
        auto Ht = H.d_t;
        out.beta = Coefficient::space_time(
            [a, b, beta, Hval, Hx, Hxx, Ht](double x, double t) {
                const double ax = a.deriv_x(x, t);
                const double LH =
                    0.5 * (a(x, t) * Hxx(x, t) + ax * Hx(x, t)) + b(x, t) * Hx(x, t);
                return beta(x, t) + (LH + Ht(x, t)) / Hval(x, t);
            },
            true);
    }

    out.alpha = Coefficient::space_time(
        [alpha, Hval](double x, double t) { return alpha(x, t) * Hval(x, t); }, true);
    return out;
}

DiscretizedOperator adjoint_operator(const EllipticOperator& L, const Coefficient& beta,
                                     const Interval& window, std::size_t nodes, double t) {
    DiscretizedOperator D = discretize(L, &beta, window, nodes, t);
    D.matrix = D.matrix.transposed();
    return D;
}

double conjugation_check(const BranchingQuadruple& Q, const GridFunction& phi, double lambda,
                         const GridFunction& u) {
    if (phi.min_interior() <= 0.0) throw PositivityError("conjugation_check needs phi > 0");
    EllipticOperator L0 = h_transform_operator(Q.L, phi);
    GridFunction lhs = apply_operator(L0, u);

    GridFunction phiu = pointwise_product(phi, u);
    GridFunction Lphiu = apply_operator(Q.L, phiu);
    double res = 0.0;
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        const double x = u.node(i);
        const double rhs = (Lphiu[i] + (Q.beta(x, 0.0) - lambda) * phiu[i]) / phi[i];
        res = std::max(res, std::abs(lhs[i] - rhs));
    }
    return res;
}

}  // namespace superflow
