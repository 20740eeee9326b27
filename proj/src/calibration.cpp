#include "evomarket/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "evomarket/rng.hpp"

namespace evomarket {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void DeConfig::validate() const {
    if (population_size < 4)
        throw std::invalid_argument("DeConfig: population_size must be >= 4 for rand/1");
    if (!(weight > 0.0 && weight <= 2.0))
        throw std::invalid_argument("DeConfig: weight must be in (0, 2]");
    if (!(crossover >= 0.0 && crossover <= 1.0))
        throw std::invalid_argument("DeConfig: crossover must be in [0, 1]");
    if (max_generations < 1)
        throw std::invalid_argument("DeConfig: max_generations must be >= 1");
    if (!(tolerance >= 0.0)) throw std::invalid_argument("DeConfig: tolerance must be >= 0");
    if (patience < 1) throw std::invalid_argument("DeConfig: patience must be >= 1");
    if (bounds.empty()) throw std::invalid_argument("DeConfig: bounds must be non-empty");
    for (const auto& [lo, hi] : bounds) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw std::invalid_argument("DeConfig: each bound needs finite lower < upper");
    }
}

namespace {

double guarded_eval(const ObjectiveFn& f, std::span<const double> x) {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
}

// Evaluates candidates [0, count) into values, optionally across threads.
// Result placement is by index, so the outcome is independent of scheduling.
void evaluate_block(const ObjectiveFn& objective, const std::vector<std::vector<double>>& xs,
                    std::vector<double>& values, int jobs) {
    const std::size_t count = xs.size();
    const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(
        static_cast<std::size_t>(std::max(jobs, 1)), 1, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) values[i] = guarded_eval(objective, xs[i]);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            values[i] = guarded_eval(objective, xs[i]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
}

} // namespace

DeResult differential_evolution(const ObjectiveFn& objective, const DeConfig& config) {
    config.validate();
    const std::size_t dims = config.bounds.size();
    const std::size_t pop_n = config.population_size;
    Rng rng(config.seed);

    std::vector<std::vector<double>> population(pop_n, std::vector<double>(dims));
    for (auto& member : population) {
        for (std::size_t d = 0; d < dims; ++d) {
            const auto& [lo, hi] = config.bounds[d];
            member[d] = lo + rng.uniform() * (hi - lo);
        }
    }
    std::vector<double> values(pop_n);
    evaluate_block(objective, population, values, config.jobs);

    DeResult result;
    result.evaluations = pop_n;

    auto best_index = [&] {
        return static_cast<std::size_t>(
            std::min_element(values.begin(), values.end()) - values.begin());
    };
    std::size_t bi = best_index();
    result.best = population[bi];
    result.best_value = values[bi];
    result.trace.push_back(result.best_value);

    std::vector<std::vector<double>> trials(pop_n, std::vector<double>(dims));
    std::vector<double> trial_values(pop_n);
    for (std::size_t gen = 0; gen < config.max_generations; ++gen) {
        // Build every trial vector serially so the random stream is
        // independent of the evaluation schedule.
        for (std::size_t i = 0; i < pop_n; ++i) {
            std::uint64_t r1, r2, r3;
            do { r1 = rng.below(pop_n); } while (r1 == i);
            do { r2 = rng.below(pop_n); } while (r2 == i || r2 == r1);
            do { r3 = rng.below(pop_n); } while (r3 == i || r3 == r1 || r3 == r2);
            const std::uint64_t forced = rng.below(dims);
            for (std::size_t d = 0; d < dims; ++d) {
                const bool take = rng.uniform() < config.crossover || d == forced;
                double v = take ? population[r1][d] +
                                      config.weight *
                                          (population[r2][d] - population[r3][d])
                                : population[i][d];
                const auto& [lo, hi] = config.bounds[d];
                trials[i][d] = std::clamp(v, lo, hi);
            }
        }
        evaluate_block(objective, trials, trial_values, config.jobs);
        result.evaluations += pop_n;
        for (std::size_t i = 0; i < pop_n; ++i) {
            if (trial_values[i] <= values[i]) {
                population[i].swap(trials[i]);
                values[i] = trial_values[i];
            }
        }
        bi = best_index();
        if (values[bi] < result.best_value) {
            result.best = population[bi];
            result.best_value = values[bi];
        }
        result.trace.push_back(result.best_value);
        result.generations = gen + 1;

        if (result.trace.size() > config.patience) {
            const double before = result.trace[result.trace.size() - 1 - config.patience];
            const double now = result.trace.back();
            const double scale = std::max(std::abs(before), config.tolerance);
            if (before - now <= config.tolerance * scale) return result;
        }
    }
    result.budget_exhausted = true;
    return result;
}

const std::array<const char*, kCalibrationDims> kCalibrationParamNames = {
    "theta_pbid",  "sigma_pbid",    "alpha_pbid",   "mu_nshares", "sigma_nshares",
    "alpha_nshares", "mu_volpref",  "sigma_volpref", "alpha_volpref"};

std::vector<std::pair<double, double>> default_calibration_bounds() {
    return {{0.0, 20.0},   {1e-6, 5.0}, {1.7, 2.0},  {-1.0, 1.0}, {1e-6, 5.0},
            {1.7, 2.0},    {-0.1, 0.1}, {1e-6, 5.0}, {1.7, 2.0}};
}

void CalibrationProblem::validate() const {
    if (target_p_bid.empty() || target_n_shares.empty() || target_vol_pref.empty())
        throw std::invalid_argument("CalibrationProblem: empty target sample pool");
    if (paths < 1 || steps < 1)
        throw std::invalid_argument("CalibrationProblem: paths and steps must be >= 1");
    if (!(fixed_alpha > 1.0 && fixed_alpha <= 2.0))
        throw std::invalid_argument("CalibrationProblem: fixed_alpha must be in (1, 2]");
}

MarginalFamily calibration_family(std::size_t process_index) {
    return process_index == 2 ? MarginalFamily::LogNormal : MarginalFamily::StudentT;
}

namespace {

const std::vector<double>* target_of(const CalibrationProblem& problem, std::size_t p) {
    switch (p) {
    case 0: return &problem.target_p_bid;
    case 1: return &problem.target_n_shares;
    default: return &problem.target_vol_pref;
    }
}

SdeSpec spec_of(const CalibrationProblem& problem, std::size_t p,
                std::span<const double> beta) {
    SdeSpec spec;
    switch (p) {
    case 0:
        spec = problem.pbid_template;
        spec.theta = beta[0];
        spec.sigma = beta[1];
        spec.alpha = beta[2];
        break;
    case 1:
        spec = problem.nshares_template;
        spec.mu = beta[3];
        spec.sigma = beta[4];
        spec.alpha = beta[5];
        break;
    default:
        spec = problem.volpref_template;
        spec.mu = beta[6];
        spec.sigma = beta[7];
        spec.alpha = beta[8];
        break;
    }
    if (!problem.free_alpha) spec.alpha = problem.fixed_alpha;
    return spec;
}

} // namespace

CandidateEval evaluate_candidate(const CalibrationProblem& problem,
                                 std::span<const double> beta) {
    problem.validate();
    if (beta.size() != kCalibrationDims)
        throw std::invalid_argument("evaluate_candidate: beta must have 9 entries");

    CandidateEval eval;
    for (std::size_t p = 0; p < 3; ++p) {
        const SdeSpec spec = spec_of(problem, p, beta);
        // Common random numbers: noise depends only on (seed, process, path).
        const std::uint64_t process_seed = derive_seed(problem.seed, p);
        std::vector<double> pool;
        pool.reserve(problem.paths * problem.steps);
        bool exploded = false;
        for (std::size_t path = 0; path < problem.paths && !exploded; ++path) {
            Rng rng(derive_seed(process_seed, static_cast<std::uint64_t>(path)));
            SdePath sim = simulate_sde(spec, static_cast<std::int64_t>(problem.steps), rng);
            for (std::size_t t = 1; t < sim.x.size(); ++t) { // x0 carries no information
                if (!std::isfinite(sim.x[t])) {
                    exploded = true;
                    break;
                }
                pool.push_back(sim.x[t]);
            }
        }
        if (exploded) {
            eval.total = kInf;
            return eval;
        }
        try {
            eval.process[p].theo_fit = fit_marginal(pool, calibration_family(p));
        } catch (const std::invalid_argument&) {
            // Degenerate pools (e.g. absorbed-at-zero paths under a log-normal
            // family) make the candidate infeasible rather than an error.
            eval.total = kInf;
            return eval;
        }
        eval.process[p].kl =
            kl_vs_density(*target_of(problem, p), eval.process[p].theo_fit, problem.kl);
        eval.total += eval.process[p].kl;
    }
    return eval;
}

double calibration_objective(const CalibrationProblem& problem,
                             std::span<const double> beta) {
    return evaluate_candidate(problem, beta).total;
}

CalibrationResult calibrate(const CalibrationProblem& problem, DeConfig de_config) {
    problem.validate();
    if (de_config.bounds.empty()) de_config.bounds = default_calibration_bounds();
    if (de_config.bounds.size() != kCalibrationDims)
        throw std::invalid_argument("calibrate: bounds must cover the 9 dimensions");

    ObjectiveFn objective = [&problem](std::span<const double> beta) {
        return calibration_objective(problem, beta);
    };
    DeResult de = differential_evolution(objective, de_config);

    CalibrationResult result;
    result.beta = de.best;
    if (!problem.free_alpha) // report the alpha values actually used
        result.beta[2] = result.beta[5] = result.beta[8] = problem.fixed_alpha;
    result.objective = de.best_value;
    result.trace = std::move(de.trace);
    result.generations = de.generations;
    result.evaluations = de.evaluations;
    result.budget_exhausted = de.budget_exhausted;

    const CandidateEval best_eval = evaluate_candidate(problem, de.best);
    const char* names[3] = {"p_bid", "n_shares", "vol_pref"};
    for (std::size_t p = 0; p < 3; ++p) {
        ProcessReport& report = result.reports[p];
        report.name = names[p];
        report.family = calibration_family(p);
        report.abm_fit = fit_marginal(*target_of(problem, p), report.family);
        report.theo_fit = best_eval.process[p].theo_fit;
        report.kl = best_eval.process[p].kl;
        switch (p) {
        case 0: report.x0 = problem.pbid_template.x0; break;
        case 1: report.x0 = problem.nshares_template.x0; break;
        default: report.x0 = problem.volpref_template.x0; break;
        }
    }
    return result;
}

} // namespace evomarket
