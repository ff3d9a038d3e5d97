#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "superflow/operators.hpp"

namespace superflow {

enum class Criticality { SubcriticalLike, CriticalNonProduct, ProductCritical };

std::string to_string(Criticality c);

struct TruncationRow {
    Interval window;
    double lambda = 0.0;
    double phi_phitilde_integral = 0.0;  // with both factors max-normalized to 1
    double residual = 0.0;
};

// Principal eigenvalue, ground state and adjoint ground state on the final
// truncation, jointly normalized so the trapezoid integral of phi*phi_tilde
// is 1. residual is the componentwise backward error max_i |(M v - lambda v)_i| / v_i.
struct SpectralTriple {
    double lambda_c = 0.0;
    GridFunction phi_c;
    GridFunction phi_tilde_c;
    Criticality criticality = Criticality::ProductCritical;
    double residual = 0.0;
    double sup_residual = 0.0;
    std::vector<TruncationRow> table;
};

struct EigenOptions {
    double tol = 1e-11;
    int max_iter = 400;
    double stabilization_threshold = 1e-3;  // criticality proxy
};

// principal eigenpair of one Dirichlet discretization (interior block)
struct InteriorEigenpair {
    double lambda = 0.0;
    std::vector<double> vec;  // positive, max 1
    double comp_residual = 0.0;
    double sup_residual = 0.0;
    int iterations = 0;
};
InteriorEigenpair principal_interior_eigenpair(const Tridiagonal& M, const EigenOptions& opts = {});

SpectralTriple principal_eigenpair(const BranchingQuadruple& Q, std::size_t grid_size,
                                   const std::vector<Interval>& truncations,
                                   const EigenOptions& opts = {});
// uses the quadruple's own truncation schedule
SpectralTriple principal_eigenpair(const BranchingQuadruple& Q, std::size_t grid_size,
                                   const EigenOptions& opts = {});

Criticality classify_criticality(const std::vector<TruncationRow>& rows, bool bounded_domain,
                                 double stabilization_threshold = 1e-3);

enum class PathBoundary { Absorb, Reflect };

struct FeynmanKacOptions {
    std::size_t paths = 20000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::size_t batch = 1024;
    PathBoundary boundary = PathBoundary::Absorb;
    int bootstrap = 400;
};

struct FeynmanKacEstimate {
    double lambda_hat = 0.0;
    double std_error = 0.0;
    std::size_t surviving = 0;
    bool all_exited = false;
    bool dt_warning = false;
};

// (1/t) log E^x[ exp(int_0^t beta(xi_s) ds); tau_A > t ] by Euler-Maruyama
FeynmanKacEstimate lambda_feynman_kac(const BranchingQuadruple& Q, double x0, const Interval& A,
                                      double t, const FeynmanKacOptions& opts = {});

struct GrowthRatePoint {
    double t = 0.0;
    double rate = 0.0;    // (1/t) log <mu, S_t 1_B>
    double scaled = 0.0;  // <mu, S_t 1_B>
};

struct GrowthRateResult {
    std::vector<GrowthRatePoint> points;
    bool trend_inconclusive = false;
};

GrowthRateResult local_growth_rate(const BranchingQuadruple& Q, const Measure& mu,
                                   const Interval& B, const std::vector<double>& t_grid,
                                   std::size_t grid_size, double dt = 0.0);

}  // namespace superflow
