#pragma once

#include <optional>
#include <string>
#include <vector>

#include "superflow/lln.hpp"
#include "superflow/operators.hpp"

#include "json.hpp"

namespace superflow {

struct AnalyticOverride {
    double lambda_c = 0.0;
    expr::Expression phi_c;        // positive on the domain interior
    expr::Expression phi_tilde_c;  // optional; empty means unknown
};

struct ModelSpec {
    std::string name;
    std::string description;
    BranchingQuadruple quadruple;
    Measure initial;
    std::optional<double> expected_lambda_c;
    std::string lambda_provenance;  // where the expected value comes from
    bool lln_allowed = true;        // false gates the weighted-mass experiments off
    std::optional<AnalyticOverride> overrides;
    nlohmann::json config;  // canonical description for hashing and manifests
};

// Built-in models.
// wright-fisher(gamma): a = x(1-x) in divergence form (drift x - 1/2), beta =
//   alpha = gamma on (0,1); expected lambda_c = gamma - 1.
// super-bm(beta, alpha): constant coefficients for (1/2) Laplacian on a
//   truncated line; expected lambda_c = beta; not product-critical, so the
//   weighted-mass experiments are gated off.
// dirichlet-box(beta, alpha, length): (1/2) Laplacian on (0, length) with
//   coefficient expressions; for constant beta, lambda_c = beta - pi^2/(2 l^2).
ModelSpec make_wright_fisher(double gamma);
ModelSpec make_super_bm(double beta, double alpha, double halfwidth = 8.0);
ModelSpec make_dirichlet_box(const std::string& beta_expr, const std::string& alpha_expr,
                             double length);

std::vector<std::string> registry_names();
ModelSpec registry_model(const std::string& name, const nlohmann::json& params);

// config document: {"model": "wright-fisher", "params": {...}} or a custom
// quadruple {"name":..., "a":"...", "b":"...", "beta":"...", "alpha":"...",
// "domain":[l,r], "initial":{"atoms":[[x,mass],...]}, "overrides":{...}}
ModelSpec model_from_config(const nlohmann::json& cfg);

// spectral data with the model's analytic overrides applied when present and
// verified against the discretized operator's residual
lln::ExperimentModel prepare_experiment_model(const ModelSpec& spec, std::size_t grid_nodes,
                                              const EigenOptions& opts = {});

}  // namespace superflow
