#include "superflow/particles.hpp"

#include <algorithm>
#include <cmath>

namespace superflow {

OffspringLaw offspring_law(double beta_x, double alpha_x, int n) {
    const double m = 1.0 + beta_x / double(n);
    const double v = 2.0 * alpha_x;
    if (!(m > 0.0)) throw ParameterError("offspring mean is not positive; increase the level n");
    if (v < 0.0) throw ParameterError("offspring variance is negative");
    const double q = v + m * m - m;  // E[k(k-1)]
    if (q < -1e-12) throw ParameterError("no offspring law matches these moments");

    for (int K = 2; K <= 64; ++K) {
        const double pK = q / (double(K) * double(K - 1));
        const double p1 = m - double(K) * pK;
        const double p0 = 1.0 - p1 - pK;
        if (pK >= -1e-15 && p1 >= -1e-15 && p0 >= -1e-15) {
            OffspringLaw law;
            law.big = K;
            law.p_big = std::max(0.0, pK);
            law.p1 = std::max(0.0, p1);
            law.p0 = std::max(0.0, p0);
            law.mean = m;
            law.variance = v;
            return law;
        }
    }
    throw ParameterError(
        "no offspring law with support {0,1,K}, K <= 64, matches mean " + std::to_string(m) +
        " and variance " + std::to_string(v) + "; use a larger level n or smaller alpha");
}

MotionTable MotionTable::build(const EllipticOperator& L, const Interval& window, int resolution,
                               double t) {
    MotionTable tab;
    tab.window = window;
    tab.inv_step = double(resolution - 1) / window.width();
    tab.drift.resize(resolution);
    tab.sqrt_a.resize(resolution);
    const double step = window.width() / double(resolution - 1);
    for (int k = 0; k < resolution; ++k) {
        const double x = window.lo + double(k) * step;
        const double a = L.a(x, t);
        if (a < -1e-9) throw ParameterError("diffusion coefficient is negative inside the domain");
        // Ito drift of the diffusion generated by (1/2)(a u')' + b u'
        tab.drift[k] = L.b(x, t) + 0.5 * L.a.deriv_x(x, t, step);
        tab.sqrt_a[k] = std::sqrt(std::max(0.0, a));
    }
    return tab;
}

SimulatedModel SimulatedModel::homogeneous(const BranchingQuadruple& Q, const Interval& window,
                                           int resolution) {
    SimulatedModel m;
    m.motion = MotionTable::build(Q.L, window, resolution, 0.0);
    m.beta_tab.resize(resolution);
    m.alpha0_tab.resize(resolution);
    const double step = window.width() / double(resolution - 1);
    for (int k = 0; k < resolution; ++k) {
        const double x = window.lo + double(k) * step;
        m.beta_tab[k] = Q.beta(x, 0.0);
        m.alpha0_tab[k] = Q.alpha(x, 0.0);
    }
    return m;
}

SimulatedModel SimulatedModel::ground_state_transformed(const BranchingQuadruple& Q,
                                                        const SpectralTriple& triple,
                                                        int resolution) {
    const GridFunction& phi = triple.phi_c;
    EllipticOperator L0 = h_transform_operator(Q.L, phi);
    SimulatedModel m;
    m.motion = MotionTable::build(L0, phi.domain(), resolution, 0.0);
    m.mean_one = true;
    m.alpha_decay = triple.lambda_c;
    m.alpha0_tab.resize(resolution);
    const double step = phi.domain().width() / double(resolution - 1);
    for (int k = 0; k < resolution; ++k) {
        const double x = phi.domain().lo + double(k) * step;
        m.alpha0_tab[k] = Q.alpha(x, 0.0) * phi.interpolate(x);
    }
    return m;
}

std::vector<double> initial_positions(const Measure& mu, int level, Rng& rng) {
    std::vector<double> pos;
    for (const auto& [x, mass] : mu.atoms) {
        const long k = std::lround(mass * double(level));
        for (long j = 0; j < k; ++j) pos.push_back(x);
    }
    for (const auto& d : mu.densities) {
        const double mass = d.integrate();
        const long k = std::lround(mass * double(level));
        // inverse CDF on the trapezoid cumulative
        std::vector<double> cdf(d.size(), 0.0);
        for (std::size_t i = 1; i < d.size(); ++i)
            cdf[i] = cdf[i - 1] + 0.5 * (d[i] + d[i - 1]) * d.spacing();
        const double total = cdf.back();
        for (long j = 0; j < k; ++j) {
            const double u = rng.uniform() * total;
            auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            std::size_t i = std::max<std::size_t>(1, it - cdf.begin());
            const double seg = cdf[i] - cdf[i - 1];
            const double w = seg > 0 ? (u - cdf[i - 1]) / seg : 0.5;
            pos.push_back(d.node(i - 1) + w * d.spacing());
        }
    }
    return pos;
}

void simulate_replicate(const SimulatedModel& model, const Measure& initial, const SimConfig& cfg,
                        std::uint64_t replicate_index,
                        const std::function<void(const ParticleCloud&)>& on_snapshot) {
    const double dt = cfg.effective_dt();
    const int n = cfg.level;
    const Interval window = model.motion.window;

    Rng rng(derive_stream_seed(cfg.seed, replicate_index));

    ParticleCloud cloud;
    cloud.level = n;
    cloud.positions = initial_positions(initial, n, rng);
    for (double x : cloud.positions)
        if (!window.strictly_contains(x))
            throw DomainError("initial particle outside the truncation");

    std::vector<double> snaps = cfg.snapshot_times;
    if (snaps.empty()) snaps.push_back(cfg.horizon);
    const std::size_t steps = std::max<std::size_t>(1, std::llround(cfg.horizon / dt));
    std::vector<std::size_t> snap_steps;
    for (double ts : snaps) snap_steps.push_back(std::min<std::size_t>(steps, std::llround(ts / dt)));

    std::size_t next_snap = 0;
    auto emit_due = [&](std::size_t step) {
        while (next_snap < snap_steps.size() && snap_steps[next_snap] == step) {
            cloud.time = double(step) * dt;
            on_snapshot(cloud);
            ++next_snap;
        }
    };
    emit_due(0);

    const double p_branch = 1.0 - std::exp(-double(n) * dt);
    const double log1m_p = std::log1p(-p_branch);
    const double sqrt_dt = std::sqrt(dt);
    const double lo = window.lo, hi = window.hi;
    const double inv_table = model.motion.inv_step;
    const std::size_t table_last = model.alpha0_tab.size() - 2;

    // interleaved (drift, sqrt_a) pairs keep the lookup on one cache line
    std::vector<double> motion2(2 * model.motion.drift.size());
    for (std::size_t k = 0; k < model.motion.drift.size(); ++k) {
        motion2[2 * k] = model.motion.drift[k];
        motion2[2 * k + 1] = model.motion.sqrt_a[k];
    }
    const double* mo = motion2.data();
    const double* beta_tab = model.mean_one ? nullptr : model.beta_tab.data();
    const double* alpha_tab = model.alpha0_tab.data();

    // per-particle geometric countdowns realize the exponential thinning
    auto draw_countdown = [&]() -> std::int32_t {
        const double g = std::floor(std::log(rng.uniform_pos()) / log1m_p);
        return g > 2e9 ? std::int32_t(2e9) : std::int32_t(g) + 1;
    };

    std::vector<double>& pos = cloud.positions;
    std::vector<std::int32_t> cnt(pos.size());
    for (auto& c : cnt) c = draw_countdown();
    std::vector<double> births;
    std::vector<std::int32_t> births_cnt;
    double particle_steps = 0.0;

    for (std::size_t step = 0; step < steps && !pos.empty(); ++step) {
        const double t0 = double(step) * dt;
        const double decay =
            model.alpha_decay != 0.0 ? std::exp(-model.alpha_decay * t0) : 1.0;
        particle_steps += double(pos.size());
        if (particle_steps > cfg.max_particle_steps)
            throw ExplosionError(
                "population cap exceeded; shorten the horizon or check the sign of lambda_c");

        std::size_t w = 0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            double x = pos[i];
            const double s = (x - lo) * inv_table;
            std::size_t k = static_cast<std::size_t>(s);
            if (k > table_last) k = table_last;
            const double fw = s - double(k);
            const double* m2 = mo + 2 * k;
            const double b = m2[0] + fw * (m2[2] - m2[0]);
            const double sa = m2[1] + fw * (m2[3] - m2[1]);
            x += b * dt + sa * sqrt_dt * rng.normal();
            if (x <= lo || x >= hi) continue;  // absorbed at the truncation boundary
            const std::int32_t c = cnt[i] - 1;
            if (c > 0) {
                pos[w] = x;
                cnt[w] = c;
                ++w;
                continue;
            }
            const double s2 = (x - lo) * inv_table;
            std::size_t k2 = static_cast<std::size_t>(s2);
            if (k2 > table_last) k2 = table_last;
            const double fw2 = s2 - double(k2);
            const double av =
                (alpha_tab[k2] + fw2 * (alpha_tab[k2 + 1] - alpha_tab[k2])) * decay;
            const double m =
                beta_tab ? 1.0 + (beta_tab[k2] + fw2 * (beta_tab[k2 + 1] - beta_tab[k2])) / n
                         : 1.0;
            const double v = 2.0 * std::max(0.0, av);
            // smallest support {0,1,K} matching the two moments
            const double q = v + m * (m - 1.0);
            int K = 2;
            double pK, p1;
            for (;; ++K) {
                pK = q / (double(K) * double(K - 1));
                p1 = m - double(K) * pK;
                if ((p1 >= -1e-14 && 1.0 - p1 - pK >= -1e-14) || K >= 64) break;
            }
            if (p1 < -1e-14 || 1.0 - p1 - pK < -1e-14)
                throw ParameterError("offspring law infeasible at a branch site");
            const double u = rng.uniform();
            int kids;
            if (u < pK) kids = K;
            else if (u < pK + std::max(0.0, p1)) kids = 1;
            else kids = 0;
            if (kids == 0) continue;
            pos[w] = x;
            cnt[w] = draw_countdown();
            ++w;
            for (int j = 1; j < kids; ++j) {
                births.push_back(x);
                births_cnt.push_back(draw_countdown());
            }
        }
        pos.resize(w);
        cnt.resize(w);
        pos.insert(pos.end(), births.begin(), births.end());
        cnt.insert(cnt.end(), births_cnt.begin(), births_cnt.end());
        births.clear();
        births_cnt.clear();
        emit_due(step + 1);
    }
    // a cloud that died before the horizon still reports its later snapshots
    while (next_snap < snap_steps.size()) {
        cloud.time = double(snap_steps[next_snap]) * dt;
        on_snapshot(cloud);
        ++next_snap;
    }
}

std::vector<ParticleCloud> simulate(const SimulatedModel& model, const Measure& initial,
                                    const SimConfig& cfg) {
    std::vector<ParticleCloud> out;
    simulate_replicate(model, initial, cfg, 0,
                       [&](const ParticleCloud& c) { out.push_back(c); });
    return out;
}

void diffusion_step(ParticleCloud& cloud, const EllipticOperator& L, double dt, Rng& rng,
                    const Interval& window) {
    if (!(dt > 0)) throw ParameterError("dt must be positive");
    const double sqrt_dt = std::sqrt(dt);
    std::size_t w = 0;
    for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
        double x = cloud.positions[i];
        const double a = L.a(x, cloud.time);
        if (a < -1e-9) throw ParameterError("diffusion coefficient is negative");
        const double drift = L.b(x, cloud.time) + 0.5 * L.a.deriv_x(x, cloud.time, 1e-5);
        x += drift * dt + std::sqrt(std::max(0.0, a)) * sqrt_dt * rng.normal();
        if (x <= window.lo || x >= window.hi) continue;
        cloud.positions[w++] = x;
    }
    cloud.positions.resize(w);
    cloud.time += dt;
}

WeightedCloud weight_cloud(const ParticleCloud& cloud, const SpaceTimeWeight& H, double t) {
    WeightedCloud out;
    out.positions = cloud.positions;
    out.weights.resize(cloud.positions.size());
    const double inv_n = 1.0 / double(cloud.level);
    for (std::size_t i = 0; i < out.positions.size(); ++i)
        out.weights[i] = H.value(out.positions[i], t) * inv_n;
    return out;
}

double pair_observable(const ParticleCloud& cloud, const GridFunction& f) {
    double s = 0.0;
    for (double x : cloud.positions) s += f.interpolate(x);
    return s / double(cloud.level);
}

double pair_observable(const WeightedCloud& cloud, const GridFunction& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < cloud.positions.size(); ++i)
        s += cloud.weights[i] * f.interpolate(cloud.positions[i]);
    return s;
}

}  // namespace superflow
