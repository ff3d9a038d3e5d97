#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "superflow/lln.hpp"
#include "superflow/models.hpp"
#include "superflow/pde.hpp"
#include "superflow/spectral.hpp"
#include "superflow/version.hpp"

namespace py = pybind11;
using namespace superflow;

namespace {

ModelSpec model_by_name(const std::string& name, py::dict params) {
    nlohmann::json j;
    for (auto item : params) {
        const std::string key = py::str(item.first);
        if (py::isinstance<py::str>(item.second))
            j[key] = item.second.cast<std::string>();
        else
            j[key] = item.second.cast<double>();
    }
    return registry_model(name, j);
}

std::vector<double> grid_nodes(const GridFunction& g) {
    std::vector<double> xs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) xs[i] = g.node(i);
    return xs;
}

}  // namespace

PYBIND11_MODULE(_superflow, m) {
    m.doc() = "branching-diffusion simulation and verification toolkit";
    m.attr("__version__") = SUPERFLOW_VERSION;

    py::register_exception<RegimeError>(m, "RegimeError");
    py::register_exception<ParameterError>(m, "ParameterError");

    py::class_<GridFunction>(m, "GridFunction")
        .def_property_readonly("values", [](const GridFunction& g) { return g.values(); })
        .def_property_readonly("nodes", &grid_nodes)
        .def("__call__", [](const GridFunction& g, double x) { return g.interpolate(x); })
        .def("integrate", &GridFunction::integrate);

    py::class_<SpectralTriple>(m, "SpectralTriple")
        .def_readonly("lambda_c", &SpectralTriple::lambda_c)
        .def_readonly("residual", &SpectralTriple::residual)
        .def_readonly("phi_c", &SpectralTriple::phi_c)
        .def_readonly("phi_tilde_c", &SpectralTriple::phi_tilde_c)
        .def_property_readonly(
            "criticality", [](const SpectralTriple& t) { return to_string(t.criticality); });

    py::class_<ModelSpec>(m, "Model")
        .def_readonly("name", &ModelSpec::name)
        .def_readonly("description", &ModelSpec::description)
        .def_property_readonly("expected_lambda_c",
                               [](const ModelSpec& s) -> py::object {
                                   if (s.expected_lambda_c) return py::float_(*s.expected_lambda_c);
                                   return py::none();
                               })
        .def_readonly("lln_allowed", &ModelSpec::lln_allowed);

    m.def("model", &model_by_name, py::arg("name"), py::arg("params") = py::dict(),
          "look up a registry model: wright-fisher, super-bm or dirichlet-box");
    m.def("registry_names", &registry_names);

    m.def(
        "principal_eigenpair",
        [](const ModelSpec& spec, std::size_t grid) {
            return principal_eigenpair(spec.quadruple, grid);
        },
        py::arg("model"), py::arg("grid") = 1001,
        "principal eigenvalue and ground states over the truncation schedule");

    m.def(
        "offspring_law",
        [](double beta_x, double alpha_x, int n) {
            auto l = offspring_law(beta_x, alpha_x, n);
            py::dict d;
            d["support"] = std::vector<int>{0, 1, l.big};
            d["probabilities"] = std::vector<double>{l.p0, l.p1, l.p_big};
            d["mean"] = l.mean;
            d["variance"] = l.variance;
            return d;
        },
        py::arg("beta_x"), py::arg("alpha_x"), py::arg("n"));

    m.def(
        "expectation_semigroup",
        [](const ModelSpec& spec, const std::vector<double>& g_values, double t, double dt) {
            const Interval w = spec.quadruple.domain().final_truncation();
            GridFunction g(w, g_values, BoundaryTag::DirichletZero);
            return expectation_semigroup(spec.quadruple, g, t, dt);
        },
        py::arg("model"), py::arg("g_values"), py::arg("t"), py::arg("dt") = 0.0,
        "S_t g on the final truncation grid");

    m.def(
        "laplace_functional",
        [](const ModelSpec& spec, double atom, double mass, const std::vector<double>& g_values,
           double t, double dt) {
            const Interval w = spec.quadruple.domain().final_truncation();
            GridFunction g(w, g_values, BoundaryTag::DirichletZero);
            LogLaplaceOptions opts;
            opts.dt = dt;
            return laplace_functional(spec.quadruple, Measure::point(atom, mass), g, t, opts);
        },
        py::arg("model"), py::arg("atom"), py::arg("mass"), py::arg("g_values"), py::arg("t"),
        py::arg("dt") = 0.0);

    m.def(
        "simulate_mass",
        [](const ModelSpec& spec, int level, double horizon, std::vector<double> times,
           std::uint64_t seed, int replicates, bool h_model, std::size_t grid) {
            SimulatedModel model;
            Measure initial = spec.initial;
            if (h_model) {
                auto triple = principal_eigenpair(spec.quadruple, grid);
                model = SimulatedModel::ground_state_transformed(spec.quadruple, triple);
                Measure nu;
                for (const auto& [x, w] : initial.atoms)
                    nu.atoms.emplace_back(x, w * triple.phi_c.interpolate(x));
                initial = nu;
            } else {
                model = SimulatedModel::homogeneous(spec.quadruple,
                                                    spec.quadruple.domain().final_truncation());
            }
            SimConfig cfg;
            cfg.level = level;
            cfg.horizon = horizon;
            cfg.snapshot_times = std::move(times);
            cfg.seed = seed;
            std::vector<std::vector<double>> out(replicates);
            for (int r = 0; r < replicates; ++r)
                simulate_replicate(model, initial, cfg, std::uint64_t(r),
                                   [&](const ParticleCloud& c) {
                                       out[r].push_back(c.total_mass());
                                   });
            return out;
        },
        py::arg("model"), py::arg("level"), py::arg("horizon"), py::arg("times"),
        py::arg("seed") = 1, py::arg("replicates") = 1, py::arg("h_model") = false,
        py::arg("grid") = 1001,
        "per-replicate total-mass snapshots of the branching particle system");

    m.def(
        "martingale_check",
        [](const ModelSpec& spec, int level, int replicates, std::vector<double> t_grid,
           std::uint64_t seed, std::size_t grid) {
            auto m0 = prepare_experiment_model(spec, grid);
            lln::ExperimentConfig cfg;
            cfg.level = level;
            cfg.replicates = replicates;
            cfg.t_grid = std::move(t_grid);
            cfg.seed = seed;
            cfg.pde_nodes = grid;
            auto res = lln::martingale_check(m0, cfg);
            py::dict d;
            d["pass"] = res.verdict.pass;
            d["target"] = res.target;
            std::vector<double> means, ses;
            for (const auto& s : res.summary.series) {
                means.push_back(s.mean);
                ses.push_back(s.std_error);
            }
            d["means"] = means;
            d["std_errors"] = ses;
            return d;
        },
        py::arg("model"), py::arg("level") = 100, py::arg("replicates") = 500,
        py::arg("t_grid") = std::vector<double>{0.5, 1.0}, py::arg("seed") = 1,
        py::arg("grid") = 801);
}
