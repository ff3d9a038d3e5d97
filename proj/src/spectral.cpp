#include "superflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "superflow/particles.hpp"
#include "superflow/pde.hpp"

namespace superflow {

std::string to_string(Criticality c) {
    switch (c) {
        case Criticality::SubcriticalLike: return "subcritical-like";
        case Criticality::CriticalNonProduct: return "critical-non-product";
        case Criticality::ProductCritical: return "product-critical";
    }
    return "?";
}

namespace {

double collatz_max(const Tridiagonal& M, const std::vector<double>& v) {
    const std::size_t n = M.size();
    double m = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double s = M.diag[i] * v[i];
        if (i > 0) s += M.lower[i] * v[i - 1];
        if (i + 1 < n) s += M.upper[i] * v[i + 1];
        m = std::max(m, s / v[i]);
    }
    return m;
}

// Rayleigh quotient through the diagonal similarity that symmetrizes the
// matrix; quadratically accurate in the residual. Falls back to the plain
// quotient when the matrix is not symmetrizable or the scaling overflows.
double symmetrized_rayleigh(const Tridiagonal& M, const std::vector<double>& v) {
    const std::size_t n = M.size();
    std::vector<double> logd(n, 0.0);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double prod = M.upper[i] * M.lower[i + 1];
        if (!(prod > 0.0)) {
            ok = false;
            break;
        }
        logd[i + 1] = logd[i] + 0.5 * std::log(M.upper[i] / M.lower[i + 1]);
        if (!std::isfinite(logd[i + 1]) || std::abs(logd[i + 1]) > 600.0) {
            ok = false;
            break;
        }
    }
    if (ok) {
        const double shift = *std::max_element(logd.begin(), logd.end());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = std::exp(logd[i] - shift) * v[i];
            num += M.diag[i] * u * u;
            den += u * u;
            if (i + 1 < n) {
                const double up = std::exp(logd[i + 1] - shift) * v[i + 1];
                num += 2.0 * std::sqrt(M.upper[i] * M.lower[i + 1]) * u * up;
            }
        }
        if (den > 0.0 && std::isfinite(num / den)) return num / den;
    }
    double num = 0.0, den = 0.0;
    const std::vector<double> Mv = M.apply(v);
    for (std::size_t i = 0; i < n; ++i) {
        num += v[i] * Mv[i];
        den += v[i] * v[i];
    }
    return num / den;
}

}  // namespace

InteriorEigenpair principal_interior_eigenpair(const Tridiagonal& M, const EigenOptions& opts) {
    const std::size_t n = M.size();
    if (n < 3) throw DomainError("eigenproblem too small");

    // safe shift above the whole spectrum (Gershgorin row bound)
    double sigma = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        double s = M.diag[i];
        if (i > 0) s += std::abs(M.lower[i]);
        if (i + 1 < n) s += std::abs(M.upper[i]);
        sigma = std::max(sigma, s);
    }
    const double scale0 = std::max(1.0, std::abs(sigma));
    sigma += 1.0;

    std::vector<double> v(n, 1.0);
    InteriorEigenpair out;
    double best_res = 1e300;
    std::vector<double> best_v;
    double lambda = 0.0;
    int no_improve = 0;

    for (int it = 0; it < opts.max_iter; ++it) {
        // v <- normalized solve of (sigma I - M) w = v
        std::vector<double> w = solve_shifted(M, sigma, -1.0, v);
        double norm = 0.0;
        for (double x : w) norm = std::max(norm, std::abs(x));
        if (!(norm > 0) || !std::isfinite(norm))
            throw ConvergenceError("inverse iteration broke down");
        for (double& x : w) x /= norm;
        // keep the Perron orientation
        double mx = 0.0;
        for (double x : w) mx = std::max(mx, x);
        if (mx < 0.5)
            for (double& x : w) x = -x;
        v.swap(w);

        lambda = symmetrized_rayleigh(M, v);
        const std::vector<double> Mv = M.apply(v);
        double comp = 0.0, sup = 0.0, vmax = 0.0;
        bool positive = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = Mv[i] - lambda * v[i];
            sup = std::max(sup, std::abs(r));
            vmax = std::max(vmax, std::abs(v[i]));
            if (v[i] <= 0.0) positive = false;
            else comp = std::max(comp, std::abs(r) / v[i]);
        }
        if (!positive) comp = 1e300;
        if (comp < best_res) {
            best_res = comp;
            best_v = v;
            out.lambda = lambda;
            out.sup_residual = sup / vmax;
            out.iterations = it + 1;
            no_improve = 0;
        } else {
            ++no_improve;
        }
        if (best_res < opts.tol) break;
        if (it > 12 && no_improve >= 6) break;  // componentwise residual floor

        // move the shift toward the Collatz upper bound, never below the root
        const double cw = collatz_max(M, v);
        const double margin = std::max(4.0 * best_res * scale0, 1e-13 * scale0);
        sigma = cw + margin;
    }

    if (best_v.empty()) throw ConvergenceError("principal eigenpair did not converge");
    for (double x : best_v)
        if (!(x > 0.0))
            throw DiscretizationError(
                "principal eigenvector changes sign; refine the discretization");
    double mx = *std::max_element(best_v.begin(), best_v.end());
    for (double& x : best_v) x /= mx;
    out.vec = std::move(best_v);
    out.comp_residual = best_res;
    if (out.comp_residual > 1e-6)
        throw ConvergenceError("principal eigenpair stalled at residual " +
                               std::to_string(out.comp_residual));
    return out;
}

SpectralTriple principal_eigenpair(const BranchingQuadruple& Q, std::size_t grid_size,
                                   const std::vector<Interval>& truncations,
                                   const EigenOptions& opts) {
    if (Q.time_dependent())
        throw ParameterError("principal_eigenpair needs a time-homogeneous quadruple");
    if (truncations.empty()) throw DomainError("no truncations given");

    SpectralTriple out;
    GridFunction phi, phi_tilde;
    double prev_lambda = -1e300;
    for (std::size_t k = 0; k < truncations.size(); ++k) {
        const Interval& A = truncations[k];
        DiscretizedOperator D = discretize(Q.L, &Q.beta, A, grid_size, 0.0);
        InteriorEigenpair right = principal_interior_eigenpair(D.matrix, opts);
        InteriorEigenpair left = principal_interior_eigenpair(D.matrix.transposed(), opts);

        const double lam_scale = std::max(1.0, std::abs(right.lambda));
        if (std::abs(right.lambda - left.lambda) > 1e-9 * lam_scale)
            throw ConvergenceError("adjoint eigenvalue disagrees with the direct one");

        std::vector<double> pv(grid_size, 0.0), qv(grid_size, 0.0);
        std::copy(right.vec.begin(), right.vec.end(), pv.begin() + 1);
        std::copy(left.vec.begin(), left.vec.end(), qv.begin() + 1);
        GridFunction p(A, std::move(pv), BoundaryTag::DirichletZero);
        GridFunction q(A, std::move(qv), BoundaryTag::DirichletZero);

        TruncationRow row;
        row.window = A;
        row.lambda = right.lambda;
        row.phi_phitilde_integral = inner_product(p, q);
        row.residual = right.comp_residual;
        out.table.push_back(row);

        if (right.lambda < prev_lambda - 1e-8 * lam_scale)
            throw ConvergenceError("eigenvalue sequence is not monotone over the truncations");
        prev_lambda = right.lambda;

        if (k + 1 == truncations.size()) {
            out.lambda_c = right.lambda;
            out.residual = std::max(right.comp_residual, left.comp_residual);
            out.sup_residual = std::max(right.sup_residual, left.sup_residual);
            phi = std::move(p);
            phi_tilde = std::move(q);
        }
    }

    // joint normalization <phi phi_tilde> = 1, both factors scaled equally
    const double I = inner_product(phi, phi_tilde);
    if (!(I > 0)) throw ConvergenceError("ground-state product integral is not positive");
    const double c = 1.0 / std::sqrt(I);
    phi.scale(c);
    phi_tilde.scale(c);
    const double check = inner_product(phi, phi_tilde);
    if (std::abs(check - 1.0) > 1e-6)
        throw ConvergenceError("ground-state normalization failed");

    out.phi_c = std::move(phi);
    out.phi_tilde_c = std::move(phi_tilde);
    if (out.table.size() >= 3)
        out.criticality = classify_criticality(out.table, Q.domain().bounded(),
                                               opts.stabilization_threshold);
    else
        out.criticality = Q.domain().bounded() ? Criticality::ProductCritical
                                               : Criticality::SubcriticalLike;
    return out;
}

SpectralTriple principal_eigenpair(const BranchingQuadruple& Q, std::size_t grid_size,
                                   const EigenOptions& opts) {
    return principal_eigenpair(Q, grid_size, Q.domain().truncations, opts);
}

Criticality classify_criticality(const std::vector<TruncationRow>& rows, bool bounded_domain,
                                 double stabilization_threshold) {
    if (rows.size() < 3)
        throw InsufficientDataError("criticality classification needs at least 3 truncations");
    if (bounded_domain) return Criticality::ProductCritical;
    const double a = rows[rows.size() - 2].phi_phitilde_integral;
    const double b = rows[rows.size() - 1].phi_phitilde_integral;
    const double rel = std::abs(b - a) / std::max(std::abs(b), 1e-300);
    if (rel < stabilization_threshold) return Criticality::ProductCritical;
    // monotone growth across the whole table reads as a diverging product
    bool growing = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].phi_phitilde_integral <= rows[i - 1].phi_phitilde_integral) growing = false;
    return growing ? Criticality::CriticalNonProduct : Criticality::SubcriticalLike;
}

FeynmanKacEstimate lambda_feynman_kac(const BranchingQuadruple& Q, double x0, const Interval& A,
                                      double t, const FeynmanKacOptions& opts) {
    if (!A.strictly_contains(x0)) throw DomainError("start point must lie inside the window");
    const double dt = opts.dt;
    if (!(dt > 0) || !(t > 0)) throw ParameterError("dt and t must be positive");

    MotionTable motion = MotionTable::build(Q.L, A, 4096, 0.0);
    const int res = 4096;
    std::vector<double> beta_tab(res);
    double max_a = 0.0;
    for (int k = 0; k < res; ++k) {
        const double x = A.lo + A.width() * double(k) / double(res - 1);
        beta_tab[k] = Q.beta(x, 0.0);
        max_a = std::max(max_a, motion.sqrt_a[k] * motion.sqrt_a[k]);
    }
    auto beta_at = [&](double x) {
        const double s = (x - A.lo) * motion.inv_step;
        std::size_t k = std::min(static_cast<std::size_t>(s), std::size_t(res - 2));
        const double w = s - double(k);
        return beta_tab[k] + w * (beta_tab[k + 1] - beta_tab[k]);
    };

    const std::size_t steps = std::max<std::size_t>(1, std::llround(t / dt));
    const double dt_eff = t / double(steps);
    const std::size_t nbatch = (opts.paths + opts.batch - 1) / opts.batch;

    std::vector<double> batch_means(nbatch, 0.0);
    std::size_t surviving = 0;
    const double sqrt_dt = std::sqrt(dt_eff);
    for (std::size_t bi = 0; bi < nbatch; ++bi) {
        Rng rng(derive_stream_seed(opts.seed, bi));
        const std::size_t count =
            std::min(opts.batch, opts.paths - bi * opts.batch);
        double acc = 0.0;
        for (std::size_t p = 0; p < count; ++p) {
            double x = x0, integral = 0.0;
            bool alive = true;
            for (std::size_t s = 0; s < steps; ++s) {
                integral += beta_at(x) * dt_eff;
                x += motion.drift_at(x) * dt_eff + motion.sqrt_a_at(x) * sqrt_dt * rng.normal();
                if (x <= A.lo || x >= A.hi) {
                    if (opts.boundary == PathBoundary::Reflect) {
                        x = x <= A.lo ? 2.0 * A.lo - x + 1e-12 : 2.0 * A.hi - x - 1e-12;
                        x = std::clamp(x, A.lo + 1e-12, A.hi - 1e-12);
                    } else {
                        alive = false;
                        break;
                    }
                }
            }
            if (alive) {
                acc += std::exp(integral);
                ++surviving;
            }
        }
        batch_means[bi] = acc / double(count);
    }

    FeynmanKacEstimate out;
    out.surviving = surviving;
    const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) /
                        double(nbatch);
    if (!(mean > 0.0)) {
        out.all_exited = true;
        out.lambda_hat = -std::numeric_limits<double>::infinity();
        return out;
    }
    out.lambda_hat = std::log(mean) / t;

    // bootstrap over batch means, merged by batch index
    Rng boot(derive_stream_seed(opts.seed, 0xB007ull));
    std::vector<double> reps;
    reps.reserve(opts.bootstrap);
    for (int b = 0; b < opts.bootstrap; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < nbatch; ++j) s += batch_means[boot.bounded(nbatch)];
        s /= double(nbatch);
        if (s > 0.0) reps.push_back(std::log(s) / t);
    }
    if (reps.size() > 1) {
        double m = std::accumulate(reps.begin(), reps.end(), 0.0) / double(reps.size());
        double var = 0.0;
        for (double r : reps) var += (r - m) * (r - m);
        out.std_error = std::sqrt(var / double(reps.size() - 1));
    }

    const double relaxation = A.width() * A.width() / (100.0 * std::max(max_a, 1e-12));
    out.dt_warning = dt_eff >= relaxation;
    return out;
}

GrowthRateResult local_growth_rate(const BranchingQuadruple& Q, const Measure& mu,
                                   const Interval& B, const std::vector<double>& t_grid,
                                   std::size_t grid_size, double dt) {
    if (t_grid.empty()) throw ParameterError("empty time grid");
    const Interval window = Q.domain().final_truncation();
    if (!B.inside(window)) throw DomainError("target window must lie inside the truncation");
    GridFunction g = GridFunction::sample(
        window, grid_size, [&](double x) { return B.strictly_contains(x) ? 1.0 : 0.0; },
        BoundaryTag::DirichletZero);
    auto path = expectation_semigroup_path(Q, g, t_grid.back(), dt, t_grid);

    GrowthRateResult out;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        GrowthRatePoint p;
        p.t = t_grid[j];
        p.scaled = mu.integrate(path.snapshots[j]);
        p.rate = p.t > 0 ? std::log(std::max(p.scaled, 1e-300)) / p.t : 0.0;
        out.points.push_back(p);
    }
    if (out.points.size() >= 2) {
        const double r1 = out.points[out.points.size() - 2].rate;
        const double r2 = out.points.back().rate;
        out.trend_inconclusive = std::abs(r2 - r1) > 0.05 * std::max(1.0, std::abs(r2));
    }
    return out;
}

}  // namespace superflow
