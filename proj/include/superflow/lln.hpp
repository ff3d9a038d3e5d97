#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "superflow/particles.hpp"
#include "superflow/pde.hpp"
#include "superflow/spectral.hpp"

namespace superflow::lln {

// A quadruple with its computed spectral data and the initial state.
struct ExperimentModel {
    BranchingQuadruple quadruple;
    Measure initial;  // mu
    SpectralTriple triple;
};

struct ExperimentConfig {
    int level = 500;
    double dt = 0.0;  // particle step; default 0.1/level
    std::vector<double> t_grid;
    int replicates = 1000;
    std::uint64_t seed = 1;
    std::vector<double> epsilons{0.1, 0.25, 0.5};
    double verdict_epsilon = 0.25;
    std::size_t pde_nodes = 1001;
    double pde_dt = 0.0;
    int histogram_bins = 16;
    double histogram_margin = 0.1;  // window shrink per side, fraction of width
    double max_particle_steps = 4e8;
    int sim_resolution = 4096;
    bool use_h_transform = true;
};

struct SeriesStat {
    double t = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;  // of the mean, from replicate-level values
};

struct EnsembleSummary {
    std::vector<SeriesStat> series;
    int replicates = 0;
    std::uint64_t seed = 0;
    double survival_fraction = 0.0;  // P(mass at t_max > 0)
    double initial_mass = 0.0;
};

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    std::map<std::string, double> metrics;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "[ok] " : "[fail] ") + what);
    }
};

// Assumption gates for the weighted-mass experiments; throws RegimeError
// naming the violated hypothesis.
void check_gates(const ExperimentModel& m);

struct MartingaleResult {
    EnsembleSummary summary;
    double target = 0.0;  // <mu, phi_c> (or ||mu|| for the raw control)
    Verdict verdict;
};
MartingaleResult martingale_check(const ExperimentModel& m, const ExperimentConfig& cfg);

struct VarianceRow {
    double t = 0.0;
    double empirical = 0.0;
    double empirical_se = 0.0;  // bootstrap
    double formula = 0.0;
    double bound = 0.0;
};
struct VarianceCheckResult {
    std::vector<VarianceRow> rows;
    EnsembleSummary summary;
    Verdict verdict;
};
VarianceCheckResult variance_check(const ExperimentModel& m, const ExperimentConfig& cfg);

struct TailRow {
    std::string f_name;
    double t = 0.0;
    double epsilon = 0.0;
    double tail = 0.0;      // P(|R_t - N_hat| > eps)
    double tail_se = 0.0;
};
struct LlnRatioResult {
    std::vector<TailRow> rows;
    EnsembleSummary summary;       // of N_hat... series carries ratio stats per t for the first f
    double proxy_sensitivity = 0.0;  // mean |N_hat(t_max) - N_hat(t_max/2)|
    Verdict verdict;
};
LlnRatioResult lln_ratio_experiment(const ExperimentModel& m,
                                    const std::vector<std::pair<std::string, GridFunction>>& fs,
                                    const ExperimentConfig& cfg);

struct DensityBin;
struct VagueDensityResult;
struct LlnCampaign;

struct DensityBin {
    double center = 0.0;
    double empirical = 0.0;  // mean over survivors of the normalized weight
    double target = 0.0;
};
struct VagueDensityResult {
    std::vector<DensityBin> bins;
    double mean_l1 = 0.0;
    std::size_t survivors = 0;
    EnsembleSummary summary;
    Verdict verdict;
};
VagueDensityResult vague_limit_density(const ExperimentModel& m, const ExperimentConfig& cfg);

// one ensemble feeding both the ratio tails and the density comparison; the
// two single-purpose experiments above are thin wrappers over this
struct LlnCampaign {
    LlnRatioResult ratio;
    VagueDensityResult density;
};
LlnCampaign lln_campaign(const ExperimentModel& m,
                         const std::vector<std::pair<std::string, GridFunction>>& fs,
                         const ExperimentConfig& cfg, bool want_density);

struct ExtinctionRow {
    double t = 0.0;
    double occupied_fraction = 0.0;  // P(X_t(B) > 0)
    double se = 0.0;
};
struct ExtinctionResult {
    std::vector<ExtinctionRow> rows;
    Verdict verdict;
};
ExtinctionResult local_extinction_check(const ExperimentModel& m, const Interval& B,
                                        const ExperimentConfig& cfg);

struct ScalingRow {
    double rho = 0.0;
    double t = 0.0;
    double scaled_mean = 0.0;  // e^{-rho t} <mu, S_t g>
    double rate = 0.0;         // (1/t) log <mu, S_t g>
};
struct ScalingResult {
    std::vector<ScalingRow> rows;
    double rate_at_horizon = 0.0;
    Verdict verdict;
};
ScalingResult scaling_dichotomy(const ExperimentModel& m, const std::vector<double>& rhos,
                                const GridFunction& g, const std::vector<double>& t_grid,
                                const ExperimentConfig& cfg);

struct ChebyshevProbe {
    double tail = 0.0;
    double tail_se = 0.0;
    double bound = 0.0;  // 9 eps^-2 * flowed variance test integral
};
// empirical tail P(|<W_{t+T},g> - <Z_{W_t}(T),g>| > eps/3) against the moment
// bound; the deterministic flow pairing uses duality <Z_nu(T), g> = <nu, S^H_T g>
ChebyshevProbe chebyshev_consistency(const ExperimentModel& m, const GridFunction& g, double t,
                                     double T, double eps, const ExperimentConfig& cfg);

// H-transform consistency: direct simulation of the transformed quadruple vs
// H-weighting the original cloud
struct TwoRouteRow {
    std::string f_name;
    double t = 0.0;
    double mean_direct = 0.0, se_direct = 0.0;
    double mean_weighted = 0.0, se_weighted = 0.0;
    double var_direct = 0.0, var_weighted = 0.0, var_se = 0.0;
};
struct TwoRouteResult {
    std::vector<TwoRouteRow> rows;
    Verdict verdict;
};
TwoRouteResult h_consistency_check(const ExperimentModel& m,
                                   const std::vector<std::pair<std::string, GridFunction>>& fs,
                                   const ExperimentConfig& cfg);

// Laplace functional cross-validation: Monte Carlo E exp<X_t,-g> vs the
// log-Laplace solve
struct LaplaceCrossRow {
    std::string g_name;
    double mc = 0.0;
    double mc_se = 0.0;
    double pde = 0.0;
};
struct LaplaceCrossResult {
    std::vector<LaplaceCrossRow> rows;
    Verdict verdict;
};
LaplaceCrossResult laplace_cross_validation(const ExperimentModel& m,
                                            const std::vector<std::pair<std::string, GridFunction>>& gs,
                                            double t, const ExperimentConfig& cfg);

}  // namespace superflow::lln
