// superflow command line: spectral analysis, moment quadratures, particle
// ensembles and the verification experiments, with reproducible artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "superflow/io.hpp"
#include "superflow/lln.hpp"
#include "superflow/models.hpp"
#include "superflow/pde.hpp"
#include "superflow/spectral.hpp"
#include "superflow/version.hpp"

using namespace superflow;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string model = "wright-fisher";
    double gamma = 2.0;
    std::string beta_expr = "1";
    std::string alpha_expr = "1";
    double length = 3.14159265358979323846;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::size_t grid = 2000;
    double dt = 0.0;
    int replicates = 0;
    int level = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::string& default_out) {
    o.out_dir = default_out;
    cmd->add_option("--config", o.config_path, "JSON model config file");
    cmd->add_option("--model", o.model, "registry model name (see `superflow models`)");
    cmd->add_option("--gamma", o.gamma, "wright-fisher branching rate");
    cmd->add_option("--mbeta", o.beta_expr, "beta expression for super-bm / dirichlet-box");
    cmd->add_option("--malpha", o.alpha_expr, "alpha expression for super-bm / dirichlet-box");
    cmd->add_option("--length", o.length, "dirichlet-box domain length");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--grid", o.grid, "eigen/PDE grid nodes");
    cmd->add_option("--dt", o.dt, "time step override");
    cmd->add_option("--replicates", o.replicates, "ensemble replicates");
    cmd->add_option("--level", o.level, "particle approximation level n");
}

ModelSpec resolve_model(const CommonOpts& o) {
    if (!o.config_path.empty()) {
        std::ifstream is(o.config_path);
        if (!is) throw UsageError("cannot open config file " + o.config_path);
        json cfg;
        try {
            cfg = json::parse(is);
        } catch (const std::exception& e) {
            throw UsageError(std::string("config does not parse: ") + e.what());
        }
        return model_from_config(cfg);
    }
    json params;
    params["gamma"] = o.gamma;
    params["beta"] = o.beta_expr;
    params["alpha"] = o.alpha_expr;
    params["length"] = o.length;
    if (o.model == "super-bm") {
        params["beta"] = std::stod(o.beta_expr);
        params["alpha"] = std::stod(o.alpha_expr);
    }
    return registry_model(o.model, params);
}

json run_config_json(const ModelSpec& spec, const CommonOpts& o, const std::string& sub) {
    json j;
    j["subcommand"] = sub;
    j["model"] = spec.config;
    j["seed"] = o.seed;
    j["grid"] = o.grid;
    j["dt"] = o.dt;
    j["replicates"] = o.replicates;
    j["level"] = o.level;
    return j;
}

std::string criticality_str(Criticality c) { return to_string(c); }

json triple_json(const SpectralTriple& t) {
    json j;
    j["lambda_c"] = t.lambda_c;
    j["residual"] = t.residual;
    j["sup_residual"] = t.sup_residual;
    j["criticality"] = criticality_str(t.criticality);
    json table = json::array();
    for (const auto& row : t.table) {
        table.push_back({{"lo", row.window.lo},
                         {"hi", row.window.hi},
                         {"lambda", row.lambda},
                         {"phi_phitilde_integral", row.phi_phitilde_integral},
                         {"residual", row.residual}});
    }
    j["truncation_table"] = table;
    return j;
}

int cmd_models(const std::string& out_dir) {
    json j = json::array();
    for (const auto& name : registry_names()) {
        json params;
        if (name == "wright-fisher") params = {{"gamma", 2.0}};
        if (name == "super-bm") params = {{"beta", 1.0}, {"alpha", 1.0}};
        if (name == "dirichlet-box") params = {{"beta", "1"}, {"alpha", "1"}};
        auto spec = registry_model(name, params);
        json m;
        m["name"] = spec.name;
        m["description"] = spec.description;
        if (spec.expected_lambda_c) {
            m["expected_lambda_c"] = *spec.expected_lambda_c;
            m["lambda_provenance"] = spec.lambda_provenance;
        }
        m["lln_allowed"] = spec.lln_allowed;
        m["example_params"] = params;
        j.push_back(m);
    }
    std::cout << j.dump(2) << "\n";
    if (!out_dir.empty()) {
        io::Manifest manifest(out_dir, {{"subcommand", "models"}}, 0);
        manifest.emit("models.json", j.dump(2) + "\n");
    }
    return 0;
}

int cmd_spectral(const CommonOpts& o) {
    auto spec = resolve_model(o);
    io::Manifest manifest(o.out_dir, run_config_json(spec, o, "spectral"), o.seed);
    auto triple = principal_eigenpair(spec.quadruple, o.grid);

    json j = triple_json(triple);
    if (spec.expected_lambda_c) {
        j["expected_lambda_c"] = *spec.expected_lambda_c;
        j["lambda_provenance"] = spec.lambda_provenance;
    }
    manifest.emit("spectral.json", j.dump(2) + "\n");

    io::CsvWriter csv({"truncation_lo", "truncation_hi", "lambda", "phi_phitilde_integral",
                       "residual"});
    for (const auto& row : triple.table)
        csv.row_values({row.window.lo, row.window.hi, row.lambda, row.phi_phitilde_integral,
                        row.residual});
    manifest.emit("truncations.csv", csv.text());

    io::CsvWriter gs({"x", "phi_c", "phi_tilde_c"});
    for (std::size_t i = 0; i < triple.phi_c.size(); ++i)
        gs.row_values({triple.phi_c.node(i), triple.phi_c[i], triple.phi_tilde_c[i]});
    manifest.emit("ground_state.csv", gs.text());

    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_transform(const CommonOpts& o) {
    auto spec = resolve_model(o);
    io::Manifest manifest(o.out_dir, run_config_json(spec, o, "transform"), o.seed);
    auto triple = principal_eigenpair(spec.quadruple, o.grid);
    auto H = SpaceTimeWeight::ground_state(triple.phi_c, triple.lambda_c);
    auto QH = H_transform_quadruple(spec.quadruple, H);

    const Interval w = spec.quadruple.domain().final_truncation();
    double max_beta = 0.0;
    io::CsvWriter csv({"x", "drift", "drift_transformed", "beta_transformed", "alpha_transformed"});
    for (std::size_t i = 1; i + 1 < o.grid; ++i) {
        const double x = w.lo + w.width() * double(i) / double(o.grid - 1);
        const double bt = QH.beta(x, 0.0);
        max_beta = std::max(max_beta, std::abs(bt));
        csv.row_values({x, spec.quadruple.L.b(x, 0.0), QH.L.b(x, 0.0), bt, QH.alpha(x, 0.0)});
    }
    manifest.emit("transformed.csv", csv.text());

    json j;
    j["lambda_c"] = triple.lambda_c;
    j["eigen_residual"] = triple.residual;
    j["max_abs_beta_transformed"] = max_beta;
    j["beta_within_10x_residual"] = max_beta <= 10.0 * triple.residual;
    manifest.emit("transform.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_moments(const CommonOpts& o, double t_max, int count, bool dump_snapshots) {
    auto spec = resolve_model(o);
    io::Manifest manifest(o.out_dir, run_config_json(spec, o, "moments"), o.seed);
    auto m = prepare_experiment_model(spec, o.grid);
    lln::check_gates(m);

    io::CsvWriter csv({"t", "mean", "variance_formula", "variance_bound"});
    for (int k = 1; k <= count; ++k) {
        const double t = t_max * double(k) / double(count);
        auto S = expectation_semigroup(m.quadruple, m.triple.phi_c, t, o.dt);
        const double mean = std::exp(-m.triple.lambda_c * t) * m.initial.integrate(S);
        auto vr = variance_weighted_mass(m.quadruple, m.triple, m.initial, t, o.dt);
        csv.row_values({t, mean, vr.value, vr.closed_bound});
    }
    manifest.emit("moments.csv", csv.text());

    if (dump_snapshots) {
        std::vector<double> times;
        for (int k = 0; k <= count; ++k) times.push_back(t_max * double(k) / double(count));
        auto path = expectation_semigroup_path(m.quadruple, m.triple.phi_c, t_max, o.dt, times);
        std::string buf;
        for (std::size_t r = 0; r < path.snapshots.size(); ++r) {
            buf += io::format_double(path.times[r]);
            for (std::size_t i = 0; i < path.snapshots[r].size(); ++i) {
                buf += ',';
                buf += io::format_double(path.snapshots[r][i]);
            }
            buf += "\r\n";
        }
        manifest.emit("semigroup_snapshots.csv", buf);
    }
    std::cout << "wrote " << (manifest.dir() / "moments.csv").string() << "\n";
    return 0;
}

int cmd_simulate(const CommonOpts& o, double horizon, const std::vector<double>& times,
                 bool h_model, bool dump_positions) {
    auto spec = resolve_model(o);
    io::Manifest manifest(o.out_dir, run_config_json(spec, o, "simulate"), o.seed);

    SimConfig cfg;
    cfg.level = o.level > 0 ? o.level : 100;
    cfg.dt = o.dt;
    cfg.horizon = horizon;
    cfg.snapshot_times = times.empty() ? std::vector<double>{horizon} : times;
    cfg.seed = o.seed;
    const int reps = o.replicates > 0 ? o.replicates : 1;

    SimulatedModel model;
    SpectralTriple triple;
    if (h_model) {
        triple = principal_eigenpair(spec.quadruple, o.grid);
        model = SimulatedModel::ground_state_transformed(spec.quadruple, triple);
    } else {
        model = SimulatedModel::homogeneous(spec.quadruple,
                                            spec.quadruple.domain().final_truncation());
    }
    Measure initial = spec.initial;
    if (h_model) {
        Measure nu;
        for (const auto& [x, w] : initial.atoms)
            nu.atoms.emplace_back(x, w * triple.phi_c.interpolate(x));
        initial = nu;
    }

    io::CsvWriter csv({"replicate", "time", "alive", "total_mass"});
    std::string positions_buf = "replicate,time,position\r\n";
    std::size_t dumped = 0;
    for (int r = 0; r < reps; ++r) {
        simulate_replicate(model, initial, cfg, std::uint64_t(r), [&](const ParticleCloud& c) {
            csv.row_values({double(r), c.time, double(c.alive_count()), c.total_mass()});
            if (dump_positions) {
                dumped += c.positions.size();
                if (dumped > 5000000)
                    throw ParameterError(
                        "position dump too large; lower replicates, level or snapshots");
                for (double x : c.positions)
                    positions_buf += std::to_string(r) + "," + io::format_double(c.time) + "," +
                                     io::format_double(x) + "\r\n";
            }
        });
    }
    manifest.emit("snapshots.csv", csv.text());
    if (dump_positions) manifest.emit("positions.csv", positions_buf);
    std::cout << "wrote " << (manifest.dir() / "snapshots.csv").string() << "\n";
    return 0;
}

void emit_series_csv(io::Manifest& manifest, const std::string& name,
                     const lln::EnsembleSummary& s) {
    io::CsvWriter csv({"t", "mean", "variance", "std_error"});
    for (const auto& row : s.series) csv.row_values({row.t, row.mean, row.variance, row.std_error});
    manifest.emit(name, csv.text());
}

int emit_verdict(io::Manifest& manifest, const std::string& experiment,
                 const lln::Verdict& verdict) {
    json j;
    j["experiment"] = experiment;
    j["pass"] = verdict.pass;
    j["metrics"] = verdict.metrics;
    j["notes"] = verdict.notes;
    manifest.emit("verdict.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return verdict.pass ? 0 : 2;
}

int cmd_verify(const CommonOpts& o, const std::string& experiment) {
    auto spec = resolve_model(o);
    json runcfg = run_config_json(spec, o, "verify");
    runcfg["experiment"] = experiment;
    io::Manifest manifest(o.out_dir, runcfg, o.seed);

    auto m = prepare_experiment_model(spec, o.grid);
    if (!spec.lln_allowed &&
        (experiment == "martingale" || experiment == "variance" || experiment == "lln" ||
         experiment == "vague"))
        throw RegimeError("product-criticality",
                          "model '" + spec.name + "' is gated off the weighted-mass experiments");

    lln::ExperimentConfig cfg;
    cfg.seed = o.seed;
    cfg.pde_nodes = o.grid / 2 + 1;
    cfg.sim_resolution = 4096;

    if (experiment == "martingale") {
        cfg.level = o.level > 0 ? o.level : 200;
        cfg.dt = o.dt > 0 ? o.dt : 0.04 / cfg.level;
        cfg.replicates = o.replicates > 0 ? o.replicates : 10000;
        cfg.t_grid = {0.5, 1.0, 2.0, 4.0};
        auto res = lln::martingale_check(m, cfg);
        emit_series_csv(manifest, "mass_series.csv", res.summary);
        return emit_verdict(manifest, experiment, res.verdict);
    }
    if (experiment == "variance") {
        cfg.level = o.level > 0 ? o.level : 200;
        cfg.dt = o.dt > 0 ? o.dt : 0.04 / cfg.level;
        cfg.replicates = o.replicates > 0 ? o.replicates : 10000;
        cfg.t_grid = {1.0, 2.0, 4.0};
        auto res = lln::variance_check(m, cfg);
        io::CsvWriter csv({"t", "empirical", "empirical_se", "formula", "bound"});
        for (const auto& row : res.rows)
            csv.row_values({row.t, row.empirical, row.empirical_se, row.formula, row.bound});
        manifest.emit("variance.csv", csv.text());
        emit_series_csv(manifest, "mass_series.csv", res.summary);
        return emit_verdict(manifest, experiment, res.verdict);
    }
    if (experiment == "lln") {
        cfg.level = o.level > 0 ? o.level : 500;
        cfg.dt = o.dt > 0 ? o.dt : 0.1 / cfg.level;
        cfg.replicates = o.replicates > 0 ? o.replicates : 4000;
        cfg.t_grid = {1.0, 2.0, 4.0, 8.0};
        const Interval w = m.quadruple.domain().final_truncation();
        auto f = GridFunction::smoothed_indicator(
            w, cfg.pde_nodes,
            {w.lo + 0.3 * w.width(), w.lo + 0.7 * w.width()});
        auto res = lln::lln_ratio_experiment(m, {{"bump_0.3_0.7", f}}, cfg);
        io::CsvWriter csv({"f", "t", "epsilon", "tail", "tail_se"});
        for (const auto& row : res.rows)
            csv.row({row.f_name, io::format_double(row.t), io::format_double(row.epsilon),
                     io::format_double(row.tail), io::format_double(row.tail_se)});
        manifest.emit("lln_tails.csv", csv.text());
        emit_series_csv(manifest, "ratio_series.csv", res.summary);
        return emit_verdict(manifest, experiment, res.verdict);
    }
    if (experiment == "vague") {
        cfg.level = o.level > 0 ? o.level : 500;
        cfg.dt = o.dt > 0 ? o.dt : 0.1 / cfg.level;
        cfg.replicates = o.replicates > 0 ? o.replicates : 4000;
        cfg.t_grid = {8.0};
        auto res = lln::vague_limit_density(m, cfg);
        io::CsvWriter csv({"bin_center", "empirical", "target"});
        for (const auto& b : res.bins) csv.row_values({b.center, b.empirical, b.target});
        manifest.emit("density.csv", csv.text());
        return emit_verdict(manifest, experiment, res.verdict);
    }
    if (experiment == "extinction") {
        cfg.level = o.level > 0 ? o.level : 200;
        cfg.dt = o.dt > 0 ? o.dt : 0.1 / cfg.level;
        cfg.replicates = o.replicates > 0 ? o.replicates : 1000;
        cfg.t_grid = {5.0, 10.0, 20.0};
        const Interval w = m.quadruple.domain().final_truncation();
        const Interval B{w.lo + 0.25 * w.width(), w.lo + 0.75 * w.width()};
        auto res = lln::local_extinction_check(m, B, cfg);
        io::CsvWriter csv({"t", "occupied_fraction", "std_error"});
        for (const auto& row : res.rows) csv.row_values({row.t, row.occupied_fraction, row.se});
        manifest.emit("extinction.csv", csv.text());
        return emit_verdict(manifest, experiment, res.verdict);
    }
    if (experiment == "scaling") {
        cfg.pde_dt = o.dt;
        const Interval w = m.quadruple.domain().final_truncation();
        auto g = GridFunction::smoothed_indicator(
            w, o.grid, {w.lo + 0.1 * w.width(), w.lo + 0.9 * w.width()});
        std::vector<double> ts;
        for (int k = 1; k <= 10; ++k) ts.push_back(double(k));
        auto res = lln::scaling_dichotomy(
            m, {m.triple.lambda_c + 0.5, m.triple.lambda_c - 0.5}, g, ts, cfg);
        io::CsvWriter csv({"rho", "t", "scaled_mean", "rate"});
        for (const auto& row : res.rows) csv.row_values({row.rho, row.t, row.scaled_mean, row.rate});
        manifest.emit("scaling.csv", csv.text());
        return emit_verdict(manifest, experiment, res.verdict);
    }
    throw UsageError("unknown experiment '" + experiment +
                     "'; pick one of martingale|variance|lln|vague|extinction|scaling");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superflow: branching-diffusion simulation and verification toolkit"};
    app.set_version_flag("--version", SUPERFLOW_VERSION);
    app.require_subcommand(1);

    CommonOpts o_spectral, o_moments, o_simulate, o_transform, o_verify;
    std::string models_out;

    auto* c_models = app.add_subcommand("models", "list the built-in model registry");
    c_models->add_option("--out", models_out, "output directory");

    auto* c_spectral =
        app.add_subcommand("spectral", "principal eigenvalue, ground states, criticality");
    add_common(c_spectral, o_spectral, "out-spectral");

    auto* c_transform =
        app.add_subcommand("transform", "ground-state space-time transform of the model");
    add_common(c_transform, o_transform, "out-transform");

    double t_max = 4.0;
    int t_count = 8;
    bool dump_snaps = false;
    auto* c_moments = app.add_subcommand("moments", "mean and variance quadratures");
    add_common(c_moments, o_moments, "out-moments");
    c_moments->add_option("--t-max", t_max, "largest time");
    c_moments->add_option("--t-count", t_count, "number of time points");
    c_moments->add_flag("--dump-snapshots", dump_snaps, "write the semigroup snapshot matrix");

    double horizon = 1.0;
    std::vector<double> snap_times;
    bool h_model = false, dump_positions = false;
    auto* c_simulate = app.add_subcommand("simulate", "branching particle ensembles");
    add_common(c_simulate, o_simulate, "out-simulate");
    c_simulate->add_option("--t", horizon, "simulation horizon");
    c_simulate->add_option("--times", snap_times, "snapshot times");
    c_simulate->add_flag("--h-model", h_model, "simulate the ground-state transformed model");
    c_simulate->add_flag("--dump-positions", dump_positions, "write raw particle positions");

    std::string experiment = "martingale";
    auto* c_verify = app.add_subcommand("verify", "statistical verification experiments");
    add_common(c_verify, o_verify, "out-verify");
    c_verify->add_option("--experiment", experiment,
                         "martingale|variance|lln|vague|extinction|scaling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (c_models->parsed()) return cmd_models(models_out);
        if (c_spectral->parsed()) return cmd_spectral(o_spectral);
        if (c_transform->parsed()) return cmd_transform(o_transform);
        if (c_moments->parsed()) return cmd_moments(o_moments, t_max, t_count, dump_snaps);
        if (c_simulate->parsed())
            return cmd_simulate(o_simulate, horizon, snap_times, h_model, dump_positions);
        if (c_verify->parsed()) return cmd_verify(o_verify, experiment);
    } catch (const RegimeError& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
