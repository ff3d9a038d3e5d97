#include "superflow/models.hpp"

#include <cmath>

#include "superflow/spectral.hpp"

namespace superflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

Measure initial_from_json(const nlohmann::json& j, const Interval& window) {
    Measure mu;
    if (!j.is_object()) {
        mu.atoms.emplace_back(0.5 * (window.lo + window.hi), 1.0);
        return mu;
    }
    if (j.contains("atoms"))
        for (const auto& a : j.at("atoms")) mu.atoms.emplace_back(a.at(0), a.at(1));
    if (j.contains("density")) {
        expr::Expression e(j.at("density").get<std::string>());
        const std::size_t n = j.value("density_nodes", 501);
        mu.densities.push_back(GridFunction::sample(
            window, n, [&](double x) { return std::max(0.0, e(x, 0.0)); },
            BoundaryTag::DirichletZero));
    }
    return mu;
}

}  // namespace

ModelSpec make_wright_fisher(double gamma) {
    ModelSpec spec;
    spec.name = "wright-fisher";
    spec.description =
        "Wright-Fisher motion (1/2) x(1-x) d2/dx2 on (0,1) with beta = alpha = gamma";
    spec.quadruple.L.a = Coefficient::from_expression("x*(1-x)");
    spec.quadruple.L.b = Coefficient::from_expression("x-0.5");
    spec.quadruple.L.domain = Domain1D::bounded_domain(0.0, 1.0);
    spec.quadruple.beta = Coefficient::constant(gamma);
    spec.quadruple.alpha = Coefficient::constant(gamma);
    spec.initial = Measure::point(0.5, 1.0);
    spec.expected_lambda_c = gamma - 1.0;
    spec.lambda_provenance = "supercritical Wright-Fisher growth rate gamma - 1";
    spec.lln_allowed = true;
    spec.config = {{"model", "wright-fisher"}, {"gamma", gamma}};
    return spec;
}

ModelSpec make_super_bm(double beta, double alpha, double halfwidth) {
    ModelSpec spec;
    spec.name = "super-bm";
    spec.description = "(1/2) Laplacian with constant beta, alpha on a truncated line";
    spec.quadruple.L.a = Coefficient::constant(1.0);
    spec.quadruple.L.b = Coefficient::constant(0.0);
    spec.quadruple.L.domain = Domain1D::whole_line(halfwidth / 4.0, 3);
    spec.quadruple.beta = Coefficient::constant(beta);
    spec.quadruple.alpha = Coefficient::constant(alpha);
    spec.initial = Measure::point(0.0, 1.0);
    spec.expected_lambda_c = beta;
    spec.lambda_provenance = "constant-coefficient whole-space rate lambda_c = beta";
    spec.lln_allowed = false;  // critical but not product-critical in one dimension
    spec.config = {{"model", "super-bm"}, {"beta", beta}, {"alpha", alpha},
                   {"halfwidth", halfwidth}};
    return spec;
}

ModelSpec make_dirichlet_box(const std::string& beta_expr, const std::string& alpha_expr,
                             double length) {
    ModelSpec spec;
    spec.name = "dirichlet-box";
    spec.description = "(1/2) Laplacian on (0, length) with Dirichlet boundary";
    spec.quadruple.L.a = Coefficient::constant(1.0);
    spec.quadruple.L.b = Coefficient::constant(0.0);
    spec.quadruple.L.domain = Domain1D::bounded_domain(0.0, length);
    expr::Expression be(beta_expr), ae(alpha_expr);
    spec.quadruple.beta = Coefficient::from_expression(be);
    spec.quadruple.alpha = Coefficient::from_expression(ae);
    spec.initial = Measure::point(0.5 * length, 1.0);
    if (!be.time_dependent()) {
        // constant beta has the sine ground state
        bool constant = true;
        const double b0 = be(0.123 * length, 0.0);
        for (double x : {0.3, 0.5, 0.9})
            if (std::abs(be(x * length, 0.0) - b0) > 1e-12) constant = false;
        if (constant) {
            spec.expected_lambda_c = b0 - 0.5 * kPi * kPi / (length * length);
            spec.lambda_provenance = "Dirichlet sine mode: beta - pi^2 / (2 length^2)";
            AnalyticOverride ov;
            ov.lambda_c = *spec.expected_lambda_c;
            char buf[64];
            std::snprintf(buf, sizeof buf, "sin(%.17g*x)", kPi / length);
            ov.phi_c = expr::Expression(buf);
            ov.phi_tilde_c = expr::Expression(buf);
            spec.overrides = ov;
        }
    }
    spec.lln_allowed = true;
    spec.config = {{"model", "dirichlet-box"}, {"beta", beta_expr}, {"alpha", alpha_expr},
                   {"length", length}};
    return spec;
}

std::vector<std::string> registry_names() { return {"wright-fisher", "super-bm", "dirichlet-box"}; }

ModelSpec registry_model(const std::string& name, const nlohmann::json& params) {
    if (name == "wright-fisher") return make_wright_fisher(params.value("gamma", 2.0));
    if (name == "super-bm")
        return make_super_bm(params.value("beta", 1.0), params.value("alpha", 1.0),
                             params.value("halfwidth", 8.0));
    if (name == "dirichlet-box")
        return make_dirichlet_box(params.value("beta", std::string("0")),
                                  params.value("alpha", std::string("1")),
                                  params.value("length", kPi));
    throw UsageError("unknown model '" + name + "'; see the models subcommand");
}

ModelSpec model_from_config(const nlohmann::json& cfg) {
    if (cfg.contains("model"))
        return registry_model(cfg.at("model").get<std::string>(),
                              cfg.value("params", cfg));
    ModelSpec spec;
    spec.name = cfg.value("name", std::string("custom"));
    const auto dom = cfg.at("domain");
    const double l = dom.at(0), r = dom.at(1);
    spec.quadruple.L.a = Coefficient::from_expression(cfg.at("a").get<std::string>());
    spec.quadruple.L.b = Coefficient::from_expression(cfg.value("b", std::string("0")));
    spec.quadruple.L.domain = Domain1D::bounded_domain(l, r, cfg.value("truncation_levels", 4));
    spec.quadruple.beta = Coefficient::from_expression(cfg.at("beta").get<std::string>());
    spec.quadruple.alpha = Coefficient::from_expression(cfg.at("alpha").get<std::string>());
    spec.initial = initial_from_json(cfg.value("initial", nlohmann::json()),
                                     spec.quadruple.domain().final_truncation());
    if (cfg.contains("overrides")) {
        AnalyticOverride ov;
        ov.lambda_c = cfg.at("overrides").at("lambda_c");
        ov.phi_c = expr::Expression(cfg.at("overrides").at("phi_c").get<std::string>());
        if (cfg.at("overrides").contains("phi_tilde_c"))
            ov.phi_tilde_c =
                expr::Expression(cfg.at("overrides").at("phi_tilde_c").get<std::string>());
        spec.overrides = ov;
    }
    spec.config = cfg;
    return spec;
}

lln::ExperimentModel prepare_experiment_model(const ModelSpec& spec, std::size_t grid_nodes,
                                              const EigenOptions& opts) {
    lln::ExperimentModel m;
    m.quadruple = spec.quadruple;
    m.initial = spec.initial;
    m.triple = principal_eigenpair(spec.quadruple, grid_nodes, opts);

    if (spec.overrides) {
        // overrides must agree with the discretization before replacing it
        const Interval w = spec.quadruple.domain().final_truncation();
        GridFunction phi = GridFunction::sample(
            w, grid_nodes, [&](double x) { return spec.overrides->phi_c(x, 0.0); },
            BoundaryTag::DirichletZero);
        DiscretizedOperator D = discretize(spec.quadruple.L, &spec.quadruple.beta, w, grid_nodes);
        std::vector<double> interior(phi.size() - 2);
        for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = phi[i + 1];
        std::vector<double> Mv = D.matrix.apply(interior);
        double res = 0.0, nrm = 0.0;
        for (std::size_t i = 0; i < interior.size(); ++i) {
            res = std::max(res, std::abs(Mv[i] - spec.overrides->lambda_c * interior[i]));
            nrm = std::max(nrm, std::abs(interior[i]));
        }
        const double h = w.width() / double(grid_nodes - 1);
        if (res / nrm > 10.0 * h * h * (1.0 + std::abs(spec.overrides->lambda_c)))
            throw ParameterError("analytic override fails the eigen-residual check");
        if (std::abs(spec.overrides->lambda_c - m.triple.lambda_c) >
            1e-2 * std::max(1.0, std::abs(m.triple.lambda_c)))
            throw ParameterError("analytic override disagrees with the computed eigenvalue");
    }
    return m;
}

}  // namespace superflow
