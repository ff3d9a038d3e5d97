#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "superflow/grid.hpp"
#include "superflow/operators.hpp"
#include "superflow/rng.hpp"
#include "superflow/spectral.hpp"

namespace superflow {

// n-th-level particle configuration: every particle carries mass 1/level
struct ParticleCloud {
    std::vector<double> positions;
    int level = 1;
    double time = 0.0;

    std::size_t alive_count() const { return positions.size(); }
    double total_mass() const { return double(positions.size()) / double(level); }
};

struct WeightedCloud {
    std::vector<double> positions;
    std::vector<double> weights;
    double total() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

// offspring distribution on {0, 1, K} matching a target mean and variance
struct OffspringLaw {
    int big = 2;  // K
    double p0 = 0.0, p1 = 1.0, p_big = 0.0;
    double mean = 1.0, variance = 0.0;

    int sample(Rng& rng) const {
        const double u = rng.uniform();
        if (u < p0) return 0;
        if (u < p0 + p1) return 1;
        return big;
    }
};

// law with mean 1 + beta_x/n and variance 2*alpha_x; support {0,1,2} when the
// moment equations allow it, otherwise {0,1,K} with the smallest feasible K
OffspringLaw offspring_law(double beta_x, double alpha_x, int n);

// drift and diffusion tabulated on a uniform table for the hot loop
struct MotionTable {
    Interval window;
    double inv_step = 0.0;
    std::vector<double> drift, sqrt_a;

    static MotionTable build(const EllipticOperator& L, const Interval& window, int resolution,
                             double t = 0.0);

    double drift_at(double x) const {
        const double s = (x - window.lo) * inv_step;
        const std::size_t k = std::min(static_cast<std::size_t>(s), drift.size() - 2);
        const double w = s - double(k);
        return drift[k] + w * (drift[k + 1] - drift[k]);
    }
    double sqrt_a_at(double x) const {
        const double s = (x - window.lo) * inv_step;
        const std::size_t k = std::min(static_cast<std::size_t>(s), sqrt_a.size() - 2);
        const double w = s - double(k);
        return sqrt_a[k] + w * (sqrt_a[k + 1] - sqrt_a[k]);
    }
};

// full tabulated model: motion plus branching moment fields; the offspring
// variance is 2*alpha0(x)*exp(-alpha_decay*t)
struct SimulatedModel {
    MotionTable motion;
    std::vector<double> beta_tab;    // zero when mean_one
    std::vector<double> alpha0_tab;
    double alpha_decay = 0.0;
    bool mean_one = false;

    static SimulatedModel homogeneous(const BranchingQuadruple& Q, const Interval& window,
                                      int resolution = 4096);
    // the ground-state transformed model: drift b + a phi'/phi, offspring mean
    // exactly one, variance 2 alpha(x) phi(x) exp(-lambda_c t)
    static SimulatedModel ground_state_transformed(const BranchingQuadruple& Q,
                                                   const SpectralTriple& triple,
                                                   int resolution = 4096);

    double beta_at(double x) const {
        if (mean_one) return 0.0;
        const double s = (x - motion.window.lo) * motion.inv_step;
        const std::size_t k = std::min(static_cast<std::size_t>(s), beta_tab.size() - 2);
        const double w = s - double(k);
        return beta_tab[k] + w * (beta_tab[k + 1] - beta_tab[k]);
    }
    double alpha0_at(double x) const {
        const double s = (x - motion.window.lo) * motion.inv_step;
        const std::size_t k = std::min(static_cast<std::size_t>(s), alpha0_tab.size() - 2);
        const double w = s - double(k);
        return alpha0_tab[k] + w * (alpha0_tab[k + 1] - alpha0_tab[k]);
    }
};

struct SimConfig {
    int level = 100;
    double dt = 0.0;  // default 0.1 / level
    double horizon = 1.0;
    std::vector<double> snapshot_times;  // default {horizon}
    std::uint64_t seed = 1;
    int replicates = 1;
    double max_particle_steps = 1e7;  // per replicate

    double effective_dt() const {
        double d = dt > 0 ? dt : 0.1 / double(level);
        if (d * double(level) > 0.1 + 1e-12)
            throw ParameterError("dt * level must stay at or below 0.1");
        return d;
    }
};

// initial particle configuration at level n: atoms get round(mass*n)
// particles; densities are sampled by inverse CDF with the replicate stream
std::vector<double> initial_positions(const Measure& mu, int level, Rng& rng);

// one replicate; snapshots are delivered in time order through on_snapshot
void simulate_replicate(const SimulatedModel& model, const Measure& initial, const SimConfig& cfg,
                        std::uint64_t replicate_index,
                        const std::function<void(const ParticleCloud&)>& on_snapshot);

// convenience: a single replicate's snapshot series
std::vector<ParticleCloud> simulate(const SimulatedModel& model, const Measure& initial,
                                    const SimConfig& cfg);

// Euler-Maruyama step with absorption at the window boundary (slow path used
// by the composable API; the ensemble loop uses the tabulated model)
void diffusion_step(ParticleCloud& cloud, const EllipticOperator& L, double dt, Rng& rng,
                    const Interval& window);

// H-weighted view of a cloud: weights H(x_i, t)/n
WeightedCloud weight_cloud(const ParticleCloud& cloud, const SpaceTimeWeight& H, double t);

// <X_t, f> with f piecewise linear
double pair_observable(const ParticleCloud& cloud, const GridFunction& f);
double pair_observable(const WeightedCloud& cloud, const GridFunction& f);

}  // namespace superflow
