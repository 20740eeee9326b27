#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evomarket/analysis.hpp"
#include "evomarket/stochastic.hpp"

namespace evomarket {

struct DeConfig {
    std::size_t population_size = 40;
    double weight = 0.8;    // differential weight F
    double crossover = 0.9; // crossover rate CR
    std::size_t max_generations = 200;
    double tolerance = 1e-6;    // relative improvement threshold
    std::size_t patience = 20;  // generations over which improvement is measured
    std::vector<std::pair<double, double>> bounds; // per-dimension [lo, hi]
    std::uint64_t seed = 1;
    int jobs = 1; // parallel objective evaluations within a generation

    void validate() const;
};

struct DeResult {
    std::vector<double> best;
    double best_value = 0.0;
    std::vector<double> trace; // best value after each generation, monotone
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    bool budget_exhausted = false; // stopped by max_generations, not tolerance
};

/// DE/rand/1/bin with bound clipping. Non-finite objective values are treated
/// as +infinity. Deterministic under (config.seed); the `jobs` level changes
/// only wall time, never results.
DeResult differential_evolution(const ObjectiveFn& objective, const DeConfig& config);

/// Order and names of the nine calibrated dimensions: for each of the three
/// parameter processes (p_bid OU, N_shares random walk, vol_pref geometric),
/// its drift-like parameter, noise scale, and tail exponent.
inline constexpr std::size_t kCalibrationDims = 9;
extern const std::array<const char*, kCalibrationDims> kCalibrationParamNames;

/// Default search box: theta in [0, 20], every sigma in [1e-6, 5],
/// mu_nshares in [-1, 1], mu_volpref in [-0.1, 0.1], every alpha in
/// [1.7, 2.0]. Alpha dimensions are searched only when free_alpha is set;
/// otherwise the forward model uses fixed_alpha throughout.
std::vector<std::pair<double, double>> default_calibration_bounds();

struct CalibrationProblem {
    // Pooled ABM samples (all periods, all runs) per parameter.
    std::vector<double> target_p_bid;
    std::vector<double> target_n_shares;
    std::vector<double> target_vol_pref;

    // Forward-model templates; theta/mu/sigma/alpha are overwritten by the
    // candidate vector during calibration. x0 defaults follow the ABM
    // ensemble's t = 0 parameter means when built by the pipeline.
    SdeSpec pbid_template{SdeKind::OuPbid, 0.0, 0.5, 0.0, 1.0, 2.0, 1.0 / 24.0, 0.5, true};
    SdeSpec nshares_template{SdeKind::RwNshares, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0 / 24.0, 10.0, true};
    SdeSpec volpref_template{SdeKind::GeomVolpref, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0 / 24.0, 1.0, true};

    // Forward-simulation budget per objective evaluation.
    std::size_t paths = 100;
    std::size_t steps = 6048;

    bool free_alpha = false;  // search alpha in [1.7, 2] instead of fixing it
    double fixed_alpha = 1.9; // used for every process when !free_alpha

    // Common-random-numbers seed: forward noise depends only on this, the
    // process index, and the path index, so the objective is a fixed
    // deterministic function of the candidate during one calibration.
    std::uint64_t seed = 99;

    KlOptions kl;

    void validate() const;
};

/// Marginal families fitted to each process pool, per the paper's choices:
/// Student-t for p_bid and N_shares, log-normal for vol_pref.
MarginalFamily calibration_family(std::size_t process_index);

struct ProcessEval {
    DistFit theo_fit;  // parametric family fitted to the simulated pool
    double kl = 0.0;   // KL(ABM empirical || fitted density)
};

struct CandidateEval {
    double total = 0.0; // sum of the three KL terms; +inf on failure
    std::array<ProcessEval, 3> process;
};

/// Full objective evaluation at one candidate vector (layout per
/// kCalibrationParamNames). Simulates the three processes forward, fits the
/// parametric family to each simulated pool, and scores the KL divergence of
/// each fitted density from the ABM empirical distribution.
CandidateEval evaluate_candidate(const CalibrationProblem& problem,
                                 std::span<const double> beta);

/// The scalar DE objective: evaluate_candidate(...).total.
double calibration_objective(const CalibrationProblem& problem,
                             std::span<const double> beta);

struct ProcessReport {
    std::string name;     // "p_bid", "n_shares", "vol_pref"
    MarginalFamily family = MarginalFamily::StudentT;
    DistFit abm_fit;      // family fitted directly to the ABM pool
    DistFit theo_fit;     // family fitted to the forward-model pool at beta
    double kl = 0.0;
    double x0 = 0.0;      // forward-simulation initial value
};

struct CalibrationResult {
    std::vector<double> beta; // effective 9-vector (alpha slots resolved)
    double objective = 0.0;
    std::vector<double> trace;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    bool budget_exhausted = false;
    std::array<ProcessReport, 3> reports;
};

/// Calibrates the nine process parameters to the ABM pools by minimizing the
/// summed KL divergence with differential evolution. Empty de_config.bounds
/// are replaced by default_calibration_bounds().
CalibrationResult calibrate(const CalibrationProblem& problem, DeConfig de_config);

} // namespace evomarket
