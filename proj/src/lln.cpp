#include "superflow/lln.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "superflow/threads.hpp"

namespace superflow::lln {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double variance_of(const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size() - 1);
}

double se_of_mean(const std::vector<double>& v, double m) {
    return std::sqrt(variance_of(v, m) / double(v.size()));
}

double bootstrap_variance_se(const std::vector<double>& v, int B, std::uint64_t seed) {
    const std::size_t n = v.size();
    if (n < 3) return 0.0;
    Rng rng(derive_stream_seed(seed, 0xB5EEDull));
    std::vector<double> vars;
    vars.reserve(B);
    for (int b = 0; b < B; ++b) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = v[rng.bounded(n)];
            s += x;
            s2 += x * x;
        }
        const double m = s / double(n);
        vars.push_back((s2 - double(n) * m * m) / double(n - 1));
    }
    const double m = mean_of(vars);
    double acc = 0.0;
    for (double x : vars) acc += (x - m) * (x - m);
    return std::sqrt(acc / double(vars.size() - 1));
}

struct Observable {
    GridFunction g;
    bool exp_neg = false;  // record exp(-<X_t, g>) instead of <X_t, g>
};

struct RunData {
    std::vector<double> times;
    std::vector<std::vector<double>> mass;               // [t][rep]
    std::vector<std::vector<std::vector<double>>> obs;   // [obs][t][rep]
    std::vector<std::vector<double>> hist;               // [rep][bin]
    double initial_mass = 0.0;
};

RunData run_ensemble(const SimulatedModel& model, const Measure& initial,
                     const ExperimentConfig& cfg, const std::vector<double>& snapshot_times,
                     const std::vector<Observable>& observables, bool histogram = false,
                     Interval hist_window = {}, int bins = 0,
                     const GridFunction* hist_weight_phi = nullptr) {
    SimConfig sim;
    sim.level = cfg.level;
    sim.dt = cfg.dt;
    sim.horizon = snapshot_times.back();
    sim.snapshot_times = snapshot_times;
    sim.seed = cfg.seed;
    sim.max_particle_steps = cfg.max_particle_steps;

    const std::size_t T = snapshot_times.size();
    const std::size_t R = cfg.replicates;
    RunData d;
    d.times = snapshot_times;
    d.mass.assign(T, std::vector<double>(R, 0.0));
    d.obs.assign(observables.size(), std::vector<std::vector<double>>(T, std::vector<double>(R, 0.0)));
    if (histogram) d.hist.assign(R, std::vector<double>(bins, 0.0));

    const double bin_w = histogram ? hist_window.width() / bins : 0.0;
    parallel_for(R, [&](std::size_t r) {
        std::size_t ti = 0;
        simulate_replicate(model, initial, sim, r, [&](const ParticleCloud& c) {
            d.mass[ti][r] = c.total_mass();
            for (std::size_t gi = 0; gi < observables.size(); ++gi) {
                const double p = pair_observable(c, observables[gi].g);
                d.obs[gi][ti][r] = observables[gi].exp_neg ? std::exp(-p) : p;
            }
            if (histogram && ti + 1 == T) {
                auto& hrow = d.hist[r];
                const double inv_n = 1.0 / double(c.level);
                for (double x : c.positions) {
                    if (x <= hist_window.lo || x >= hist_window.hi) continue;
                    const int b = std::min(bins - 1, int((x - hist_window.lo) / bin_w));
                    const double w =
                        hist_weight_phi ? inv_n / hist_weight_phi->interpolate(x) : inv_n;
                    hrow[b] += w;
                }
            }
            ++ti;
        });
    });
    Rng r0(1);
    d.initial_mass = double(initial_positions(initial, cfg.level, r0).size()) / double(cfg.level);
    return d;
}

Measure weighted_initial(const Measure& mu, const GridFunction& phi) {
    Measure nu;
    for (const auto& [x, w] : mu.atoms) nu.atoms.emplace_back(x, w * phi.interpolate(x));
    for (const auto& dgrid : mu.densities) {
        GridFunction d = dgrid;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= phi.interpolate(d.node(i));
        nu.densities.push_back(std::move(d));
    }
    return nu;
}

SeriesStat stat_row(double t, const std::vector<double>& values) {
    SeriesStat s;
    s.t = t;
    s.mean = mean_of(values);
    s.variance = variance_of(values, s.mean);
    s.std_error = se_of_mean(values, s.mean);
    return s;
}

double survival_fraction(const std::vector<double>& final_mass) {
    std::size_t alive = 0;
    for (double m : final_mass)
        if (m > 0.0) ++alive;
    return double(alive) / double(final_mass.size());
}

GridFunction resample_onto(const GridFunction& f, const GridFunction& grid_like) {
    GridFunction out = grid_like;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.interpolate(out.node(i));
    return out;
}

}  // namespace

void check_gates(const ExperimentModel& m) {
    if (!(m.triple.lambda_c > 0.0))
        throw RegimeError("lambda_c > 0",
                          "computed lambda_c = " + std::to_string(m.triple.lambda_c));
    if (m.triple.criticality != Criticality::ProductCritical)
        throw RegimeError("product-criticality",
                          "classified as " + to_string(m.triple.criticality));
    const GridFunction& phi = m.triple.phi_c;
    double mx = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i)
        mx = std::max(mx, std::abs(m.quadruple.alpha(phi.node(i), 0.0) * phi[i]));
    if (!std::isfinite(mx)) throw RegimeError("alpha phi_c bounded");
    const double mp = m.initial.integrate(phi);
    if (!std::isfinite(mp)) throw RegimeError("<mu, phi_c> finite");
    if (!(m.initial.total_mass() > 0.0)) throw RegimeError("||mu|| != 0");
}

MartingaleResult martingale_check(const ExperimentModel& m, const ExperimentConfig& cfg) {
    MartingaleResult out;
    RunData data;
    if (cfg.use_h_transform) {
        check_gates(m);
        auto model = SimulatedModel::ground_state_transformed(m.quadruple, m.triple,
                                                              cfg.sim_resolution);
        const Measure nu = weighted_initial(m.initial, m.triple.phi_c);
        out.target = m.initial.integrate(m.triple.phi_c);
        data = run_ensemble(model, nu, cfg, cfg.t_grid, {});
    } else {
        const Interval window = m.quadruple.domain().final_truncation();
        auto model = SimulatedModel::homogeneous(m.quadruple, window, cfg.sim_resolution);
        out.target = m.initial.total_mass();
        data = run_ensemble(model, m.initial, cfg, cfg.t_grid, {});
    }

    out.summary.replicates = cfg.replicates;
    out.summary.seed = cfg.seed;
    out.summary.initial_mass = data.initial_mass;
    out.summary.survival_fraction = survival_fraction(data.mass.back());
    for (std::size_t ti = 0; ti < data.times.size(); ++ti) {
        SeriesStat s = stat_row(data.times[ti], data.mass[ti]);
        out.summary.series.push_back(s);
        out.verdict.require(std::abs(s.mean - out.target) <= 3.0 * s.std_error,
                            "mean mass at t=" + std::to_string(s.t) + " within 3 SE of target");
    }
    out.verdict.metrics["target"] = out.target;
    return out;
}

VarianceCheckResult variance_check(const ExperimentModel& m, const ExperimentConfig& cfg) {
    check_gates(m);
    VarianceCheckResult out;
    auto model =
        SimulatedModel::ground_state_transformed(m.quadruple, m.triple, cfg.sim_resolution);
    const Measure nu = weighted_initial(m.initial, m.triple.phi_c);
    RunData data = run_ensemble(model, nu, cfg, cfg.t_grid, {});

    out.summary.replicates = cfg.replicates;
    out.summary.seed = cfg.seed;
    out.summary.survival_fraction = survival_fraction(data.mass.back());

    double prev = -1.0;
    for (std::size_t ti = 0; ti < data.times.size(); ++ti) {
        const double t = data.times[ti];
        SeriesStat s = stat_row(t, data.mass[ti]);
        out.summary.series.push_back(s);

        VarianceRow row;
        row.t = t;
        row.empirical = s.variance;
        row.empirical_se = bootstrap_variance_se(data.mass[ti], 300, cfg.seed + ti);
        auto vr = variance_weighted_mass(m.quadruple, m.triple, m.initial, t, cfg.pde_dt,
                                         std::max(16, int(t * 8)));
        row.formula = vr.value;
        row.bound = vr.closed_bound;
        out.rows.push_back(row);

        out.verdict.require(
            std::abs(row.empirical - row.formula) <=
                0.10 * row.formula + 3.0 * row.empirical_se,
            "variance at t=" + std::to_string(t) + " matches the quadrature within 10% + 3 SE");
        out.verdict.require(row.formula <= row.bound * (1.0 + 1e-9),
                            "quadrature at t=" + std::to_string(t) + " below the closed bound");
        out.verdict.require(row.empirical <= row.bound + 3.0 * row.empirical_se,
                            "empirical variance at t=" + std::to_string(t) +
                                " below the closed bound (3 SE slack)");
        out.verdict.require(row.empirical >= prev,
                            "empirical variance nondecreasing at t=" + std::to_string(t));
        prev = row.empirical;
    }
    return out;
}

LlnRatioResult lln_ratio_experiment(const ExperimentModel& m,
                                    const std::vector<std::pair<std::string, GridFunction>>& fs,
                                    const ExperimentConfig& cfg) {
    if (fs.empty()) throw TestFunctionError("empty test battery");
    return lln_campaign(m, fs, cfg, false).ratio;
}

LlnCampaign lln_campaign(const ExperimentModel& m,
                         const std::vector<std::pair<std::string, GridFunction>>& fs,
                         const ExperimentConfig& cfg, bool want_density) {
    check_gates(m);
    LlnCampaign campaign;
    LlnRatioResult& out = campaign.ratio;

    const GridFunction& phi = m.triple.phi_c;
    const double lambda = m.triple.lambda_c;
    const double mu_phi = m.initial.integrate(phi);

    // snapshot grid: requested times plus the half-horizon sensitivity probe
    std::vector<double> snaps = cfg.t_grid;
    const double t_max = cfg.t_grid.back();
    snaps.push_back(0.5 * t_max);
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    // observables <W_t, f/phi>; PDE denominators <mu, S_t f>
    std::vector<Observable> obs;
    std::vector<std::vector<double>> denom(fs.size(), std::vector<double>(snaps.size(), 0.0));
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        GridFunction g = phi;
        const GridFunction f_on = resample_onto(fs[fi].second, phi);
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = (phi[i] > 0.0) ? f_on[i] / phi[i] : 0.0;
        obs.push_back({std::move(g), false});

        GridFunction f_pde = GridFunction::sample(
            phi.domain(), cfg.pde_nodes,
            [&](double x) { return fs[fi].second.interpolate(x); }, BoundaryTag::DirichletZero);
        auto path = expectation_semigroup_path(m.quadruple, f_pde, snaps.back(), cfg.pde_dt, snaps);
        for (std::size_t ti = 0; ti < snaps.size(); ++ti) {
            denom[fi][ti] = m.initial.integrate(path.snapshots[ti]);
            if (!(denom[fi][ti] > 1e-12))
                throw TestFunctionError("mean mass vanished for test function " + fs[fi].first);
        }
    }

    const Interval domain = phi.domain();
    const double margin = cfg.histogram_margin * domain.width();
    const Interval hist_window{domain.lo + margin, domain.hi - margin};
    auto model =
        SimulatedModel::ground_state_transformed(m.quadruple, m.triple, cfg.sim_resolution);
    const Measure nu = weighted_initial(m.initial, phi);
    RunData data = run_ensemble(model, nu, cfg, snaps, obs, want_density, hist_window,
                                cfg.histogram_bins, &phi);

    const std::size_t R = cfg.replicates;
    const std::size_t t_max_idx = snaps.size() - 1;
    std::size_t t_half_idx = 0;
    for (std::size_t ti = 0; ti < snaps.size(); ++ti)
        if (std::abs(snaps[ti] - 0.5 * t_max) < 1e-12) t_half_idx = ti;

    std::vector<double> nhat(R);
    for (std::size_t r = 0; r < R; ++r) nhat[r] = data.mass[t_max_idx][r] / mu_phi;
    double sens = 0.0;
    for (std::size_t r = 0; r < R; ++r)
        sens += std::abs(data.mass[t_max_idx][r] - data.mass[t_half_idx][r]);
    out.proxy_sensitivity = sens / double(R) / mu_phi;

    out.summary.replicates = cfg.replicates;
    out.summary.seed = cfg.seed;
    out.summary.survival_fraction = survival_fraction(data.mass[t_max_idx]);
    out.summary.initial_mass = data.initial_mass;

    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        std::vector<double> prev_tail(cfg.epsilons.size(), 2.0);
        std::vector<double> prev_se(cfg.epsilons.size(), 0.0);
        bool verdict_f_ok = true;
        double final_tail = 1.0;
        for (std::size_t ti = 0; ti < snaps.size(); ++ti) {
            const bool requested =
                std::find(cfg.t_grid.begin(), cfg.t_grid.end(), snaps[ti]) != cfg.t_grid.end();
            if (!requested) continue;
            std::vector<double> ratio(R);
            const double growth = std::exp(lambda * snaps[ti]);
            for (std::size_t r = 0; r < R; ++r)
                ratio[r] = growth * data.obs[fi][ti][r] / denom[fi][ti];
            if (fi == 0) out.summary.series.push_back(stat_row(snaps[ti], ratio));
            for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
                const double eps = cfg.epsilons[ei];
                std::size_t cnt = 0;
                for (std::size_t r = 0; r < R; ++r)
                    if (std::abs(ratio[r] - nhat[r]) > eps) ++cnt;
                TailRow row;
                row.f_name = fs[fi].first;
                row.t = snaps[ti];
                row.epsilon = eps;
                row.tail = double(cnt) / double(R);
                row.tail_se = std::sqrt(row.tail * (1.0 - row.tail) / double(R));
                out.rows.push_back(row);
                if (eps == cfg.verdict_epsilon) {
                    if (row.tail > prev_tail[ei] + prev_se[ei]) verdict_f_ok = false;
                    prev_tail[ei] = row.tail;
                    prev_se[ei] = row.tail_se;
                    final_tail = row.tail;
                }
            }
        }
        out.verdict.require(verdict_f_ok,
                            "tail nonincreasing (1 SE slack) for f=" + fs[fi].first);
        out.verdict.require(final_tail < 0.1,
                            "final tail below 0.1 for f=" + fs[fi].first + " at eps=" +
                                std::to_string(cfg.verdict_epsilon));
        out.verdict.metrics["final_tail_" + fs[fi].first] = final_tail;
    }
    out.verdict.metrics["proxy_sensitivity"] = out.proxy_sensitivity;
    out.verdict.metrics["survival_fraction"] = out.summary.survival_fraction;

    if (want_density) {
        VagueDensityResult& dens = campaign.density;
        const int bins = cfg.histogram_bins;
        const double bw = hist_window.width() / bins;
        dens.summary.replicates = cfg.replicates;
        dens.summary.seed = cfg.seed;
        const auto& final_mass = data.mass[t_max_idx];
        dens.summary.survival_fraction = survival_fraction(final_mass);

        // bin targets from the adjoint ground state
        std::vector<double> target(bins, 0.0);
        for (int b = 0; b < bins; ++b) {
            double acc = 0.0;
            const int sub = 16;
            for (int j = 0; j <= sub; ++j) {
                const double x = hist_window.lo + b * bw + bw * double(j) / sub;
                acc += ((j == 0 || j == sub) ? 0.5 : 1.0) * m.triple.phi_tilde_c.interpolate(x);
            }
            target[b] = acc;
        }
        const double tsum = std::accumulate(target.begin(), target.end(), 0.0);
        for (double& v : target) v /= tsum;

        std::size_t survivors = 0;
        double l1 = 0.0;
        std::vector<double> emp_mean(bins, 0.0);
        for (std::size_t r = 0; r < data.hist.size(); ++r) {
            if (!(final_mass[r] > 0.0)) continue;
            const auto& hrow = data.hist[r];
            const double s = std::accumulate(hrow.begin(), hrow.end(), 0.0);
            if (!(s > 0.0)) continue;  // survivor with no mass in the window
            ++survivors;
            double d = 0.0;
            for (int b = 0; b < bins; ++b) {
                const double p = hrow[b] / s;
                emp_mean[b] += p;
                d += std::abs(p - target[b]);
            }
            l1 += d;
        }
        if (survivors < 100)
            throw StatisticalPowerError("only " + std::to_string(survivors) +
                                        " surviving replicates; increase the ensemble");
        dens.survivors = survivors;
        dens.mean_l1 = l1 / double(survivors);
        for (int b = 0; b < bins; ++b) {
            DensityBin row;
            row.center = hist_window.lo + (b + 0.5) * bw;
            row.empirical = emp_mean[b] / double(survivors);
            row.target = target[b];
            dens.bins.push_back(row);
        }
        dens.verdict.require(dens.mean_l1 < 0.1,
                             "mean L1 distance to the limit density below 0.1");
        dens.verdict.metrics["mean_l1"] = dens.mean_l1;
        dens.verdict.metrics["survivors"] = double(survivors);
    }
    return campaign;
}

VagueDensityResult vague_limit_density(const ExperimentModel& m, const ExperimentConfig& cfg) {
    return lln_campaign(m, {}, cfg, true).density;
}

ExtinctionResult local_extinction_check(const ExperimentModel& m, const Interval& B,
                                        const ExperimentConfig& cfg) {
    if (m.triple.lambda_c > 1e-9)
        throw RegimeError("lambda_c <= 0",
                          "local extinction needs a non-positive rate, got " +
                              std::to_string(m.triple.lambda_c));
    ExtinctionResult out;
    const Interval window = m.quadruple.domain().final_truncation();
    auto model = SimulatedModel::homogeneous(m.quadruple, window, cfg.sim_resolution);

    GridFunction fB = GridFunction::sample(
        window, 1024, [&](double x) { return B.strictly_contains(x) ? 1.0 : 0.0; },
        BoundaryTag::DirichletZero);
    RunData data = run_ensemble(model, m.initial, cfg, cfg.t_grid, {{fB, false}});

    double prev = 2.0, prev_se = 0.0;
    bool monotone = true;
    for (std::size_t ti = 0; ti < data.times.size(); ++ti) {
        std::size_t cnt = 0;
        for (double v : data.obs[0][ti])
            if (v > 0.0) ++cnt;
        ExtinctionRow row;
        row.t = data.times[ti];
        row.occupied_fraction = double(cnt) / double(cfg.replicates);
        row.se = std::sqrt(row.occupied_fraction * (1.0 - row.occupied_fraction) /
                           double(cfg.replicates));
        out.rows.push_back(row);
        if (row.occupied_fraction > prev + prev_se) monotone = false;
        prev = row.occupied_fraction;
        prev_se = row.se;
    }
    out.verdict.require(monotone, "occupation probability decreases (1 SE slack)");
    out.verdict.require(out.rows.back().occupied_fraction < 0.05,
                        "final occupation probability below 0.05");
    out.verdict.metrics["final_occupied"] = out.rows.back().occupied_fraction;
    return out;
}

ScalingResult scaling_dichotomy(const ExperimentModel& m, const std::vector<double>& rhos,
                                const GridFunction& g, const std::vector<double>& t_grid,
                                const ExperimentConfig& cfg) {
    ScalingResult out;
    const double lambda = m.triple.lambda_c;
    auto path = expectation_semigroup_path(m.quadruple, g, t_grid.back(), cfg.pde_dt, t_grid);
    const double initial = m.initial.integrate(g);
    if (!(initial > 0.0)) throw TestFunctionError("test function misses the initial measure");

    std::vector<double> means(t_grid.size());
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti)
        means[ti] = m.initial.integrate(path.snapshots[ti]);

    for (double rho : rhos) {
        bool monotone_down = true;
        double prev = 1e300;
        for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
            ScalingRow row;
            row.rho = rho;
            row.t = t_grid[ti];
            row.scaled_mean = std::exp(-rho * row.t) * means[ti];
            row.rate = row.t > 0 ? std::log(std::max(means[ti], 1e-300)) / row.t : 0.0;
            out.rows.push_back(row);
            if (ti > 0 && row.scaled_mean > prev * (1.0 + 1e-9)) monotone_down = false;
            prev = row.scaled_mean;
        }
        const double final_scaled = out.rows.back().scaled_mean;
        if (rho > lambda + 0.25) {
            out.verdict.require(final_scaled <= 1e-2 * initial,
                                "over-scaling decays below 1e-2 of the initial value");
            out.verdict.require(monotone_down, "over-scaled mean is monotone decreasing");
        } else if (rho < lambda - 0.25) {
            out.verdict.require(final_scaled >= 1e2 * initial,
                                "under-scaling grows above 1e2 of the initial value");
        }
    }
    out.rate_at_horizon = std::log(std::max(means.back(), 1e-300)) / t_grid.back();
    out.verdict.require(std::abs(out.rate_at_horizon - lambda) <= 0.1,
                        "growth-rate estimate within 0.1 of lambda_c");
    out.verdict.metrics["rate_at_horizon"] = out.rate_at_horizon;
    return out;
}

ChebyshevProbe chebyshev_consistency(const ExperimentModel& m, const GridFunction& g, double t,
                                     double T, double eps, const ExperimentConfig& cfg) {
    check_gates(m);
    const GridFunction& phi = m.triple.phi_c;
    EllipticOperator L0 = h_transform_operator(m.quadruple.L, phi);

    // deterministic-flow pairing by duality: <Z_{W_t}(T), g> = <W_t, S^H_T g>
    const GridFunction g_on = resample_onto(g, phi);
    const GridFunction sg = evolve_linear(L0, nullptr, g_on, T, cfg.pde_dt);

    auto model =
        SimulatedModel::ground_state_transformed(m.quadruple, m.triple, cfg.sim_resolution);
    const Measure nu = weighted_initial(m.initial, phi);

    ExperimentConfig run_cfg = cfg;
    run_cfg.t_grid = {t, t + T};
    RunData data = run_ensemble(model, nu, run_cfg, run_cfg.t_grid, {{sg, false}, {g_on, false}});

    const std::size_t R = cfg.replicates;
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < R; ++r) {
        const double flow_pairing = data.obs[0][0][r];   // <W_t, S^H_T g>
        const double late_pairing = data.obs[1][1][r];   // <W_{t+T}, g>
        if (std::abs(late_pairing - flow_pairing) > eps / 3.0) ++cnt;
    }
    ChebyshevProbe probe;
    probe.tail = double(cnt) / double(R);
    probe.tail_se = std::sqrt(probe.tail * (1.0 - probe.tail) / double(R));
    auto integral = variance_test_integral(m.quadruple, m.triple, nu, g_on, T, t, cfg.pde_dt, 16,
                                           /*flow_initial_by=*/t);
    probe.bound = integral.chebyshev_bound(eps);
    return probe;
}

TwoRouteResult h_consistency_check(const ExperimentModel& m,
                                   const std::vector<std::pair<std::string, GridFunction>>& fs,
                                   const ExperimentConfig& cfg) {
    check_gates(m);
    TwoRouteResult out;
    const GridFunction& phi = m.triple.phi_c;
    const double lambda = m.triple.lambda_c;
    const Interval window = phi.domain();

    // route A: simulate the transformed quadruple, pair with f directly
    std::vector<Observable> obs_direct;
    for (const auto& [name, f] : fs) obs_direct.push_back({resample_onto(f, phi), false});
    auto model_h =
        SimulatedModel::ground_state_transformed(m.quadruple, m.triple, cfg.sim_resolution);
    const Measure nu = weighted_initial(m.initial, phi);
    RunData direct = run_ensemble(model_h, nu, cfg, cfg.t_grid, obs_direct);

    // route B: simulate the original quadruple, weight the cloud by H
    std::vector<Observable> obs_weighted;
    for (const auto& [name, f] : fs) {
        GridFunction fphi = resample_onto(f, phi);
        for (std::size_t i = 0; i < fphi.size(); ++i) fphi[i] *= phi[i];
        obs_weighted.push_back({std::move(fphi), false});
    }
    auto model_x = SimulatedModel::homogeneous(m.quadruple, window, cfg.sim_resolution);
    ExperimentConfig cfg_b = cfg;
    cfg_b.seed = derive_stream_seed(cfg.seed, 0x0FF5E7ull);
    RunData weighted = run_ensemble(model_x, m.initial, cfg_b, cfg.t_grid, obs_weighted);

    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        for (std::size_t ti = 0; ti < cfg.t_grid.size(); ++ti) {
            const double t = cfg.t_grid[ti];
            const double decay = std::exp(-lambda * t);
            std::vector<double> a = direct.obs[fi][ti];
            std::vector<double> b = weighted.obs[fi][ti];
            for (double& x : b) x *= decay;

            TwoRouteRow row;
            row.f_name = fs[fi].first;
            row.t = t;
            row.mean_direct = mean_of(a);
            row.se_direct = se_of_mean(a, row.mean_direct);
            row.mean_weighted = mean_of(b);
            row.se_weighted = se_of_mean(b, row.mean_weighted);
            row.var_direct = variance_of(a, row.mean_direct);
            row.var_weighted = variance_of(b, row.mean_weighted);
            const double se_va = bootstrap_variance_se(a, 300, cfg.seed + ti);
            const double se_vb = bootstrap_variance_se(b, 300, cfg_b.seed + ti);
            row.var_se = std::sqrt(se_va * se_va + se_vb * se_vb);
            out.rows.push_back(row);

            const double se_mean =
                std::sqrt(row.se_direct * row.se_direct + row.se_weighted * row.se_weighted);
            out.verdict.require(std::abs(row.mean_direct - row.mean_weighted) <= 3.0 * se_mean,
                                "means agree within 3 SE for f=" + fs[fi].first +
                                    " at t=" + std::to_string(t));
            out.verdict.require(
                std::abs(row.var_direct - row.var_weighted) <= 3.0 * row.var_se,
                "variances agree within 3 SE for f=" + fs[fi].first + " at t=" + std::to_string(t));
        }
    }
    return out;
}

LaplaceCrossResult laplace_cross_validation(const ExperimentModel& m,
                                            const std::vector<std::pair<std::string, GridFunction>>& gs,
                                            double t, const ExperimentConfig& cfg) {
    LaplaceCrossResult out;
    const Interval window = m.quadruple.domain().final_truncation();
    auto model = SimulatedModel::homogeneous(m.quadruple, window, cfg.sim_resolution);

    std::vector<Observable> obs;
    for (const auto& [name, g] : gs) obs.push_back({g, true});
    ExperimentConfig run_cfg = cfg;
    run_cfg.t_grid = {t};
    RunData data = run_ensemble(model, m.initial, run_cfg, run_cfg.t_grid, obs);

    for (std::size_t gi = 0; gi < gs.size(); ++gi) {
        LaplaceCrossRow row;
        row.g_name = gs[gi].first;
        row.mc = mean_of(data.obs[gi][0]);
        row.mc_se = se_of_mean(data.obs[gi][0], row.mc);

        GridFunction g_pde = GridFunction::sample(
            window, cfg.pde_nodes, [&](double x) { return gs[gi].second.interpolate(x); },
            BoundaryTag::DirichletZero);
        LogLaplaceOptions opts;
        opts.dt = cfg.pde_dt;
        row.pde = laplace_functional(m.quadruple, m.initial, g_pde, t, opts);
        out.rows.push_back(row);
        out.verdict.require(std::abs(row.mc - row.pde) <= 3.0 * row.mc_se,
                            "Laplace functional matches within 3 SE for g=" + gs[gi].first);
    }
    return out;
}

}  // namespace superflow::lln
