#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evomarket/agents.hpp"
#include "evomarket/matching_engine.hpp"
#include "evomarket/selection.hpp"

namespace evomarket {

struct SimConfig {
    std::int64_t n_agents = 100;
    std::int64_t periods_per_day = 24;
    std::int64_t days = 252;
    SelectionConfig selection;
    ParamPriors priors;
    double initial_price = 100.0;
    double initial_cash = 1000.0;
    std::int64_t initial_shares = 100;
    double p_trade = 1.0;       // per-period probability that an agent acts
    std::int64_t max_order_age = 24;
    // Every `param_sample_stride` periods the full per-agent parameter set is
    // snapshotted (0 disables). These samples feed marginal fits and
    // calibration targets; the default keeps one snapshot per trading day.
    std::int64_t param_sample_stride = 24;
    std::uint64_t seed = 1;
    std::int64_t n_runs = 1;

    std::int64_t total_periods() const { return periods_per_day * days; }
    void validate() const;
};

/// Per-agent parameter values observed at one sampled period.
struct ParamSample {
    std::int64_t period = 0;
    std::vector<AgentParams> values; // one entry per active agent
};

/// Full per-run time series. Index t of the per-period vectors refers to the
/// state after period t cleared; index 0 is the pre-simulation snapshot.
/// `returns[t-1]` is log10 price(t) - log10 price(t-1).
struct RunRecord {
    std::uint32_t run_index = 0;
    std::uint64_t run_seed = 0;
    std::vector<double> price;          // length T+1
    std::vector<double> returns;        // length T
    std::vector<double> mean_p_bid;     // length T+1, over agents active that period
    std::vector<double> sd_p_bid;
    std::vector<double> mean_n_shares;
    std::vector<double> sd_n_shares;
    std::vector<double> mean_vol_pref;
    std::vector<double> sd_vol_pref;
    std::vector<double> mean_profit;    // length T+1
    std::vector<std::int64_t> volume;   // length T+1, executed shares (0 at t=0)
    std::vector<double> cash_injected;  // length T+1, re-endowment cash per period
    std::vector<std::int64_t> shares_injected;
    std::vector<SelectionEvent> events;
    std::vector<ParamSample> param_samples;
    std::int64_t price_floor_events = 0;
};

/// One simulated market: the period loop over eviction, order intake, batch
/// clearing, settlement, recording and the selection hook. Deterministic for
/// a given (config, seed).
class MarketSim {
public:
    MarketSim(const SimConfig& config, std::uint64_t seed, std::uint32_t run_index = 0);

    /// Advances one trading period.
    void step();

    /// Runs all remaining periods and returns the completed record.
    RunRecord run();

    const std::vector<AgentState>& population() const { return population_; }
    const OrderBook& book() const { return book_; }
    double price() const { return price_; }
    std::int64_t period() const { return period_; }
    const RunRecord& record() const { return record_; }

private:
    void record_period(std::int64_t executed_volume, double cash_injected,
                       std::int64_t shares_injected);

    SimConfig config_;
    Rng rng_;
    OrderBook book_;
    std::vector<AgentState> population_;
    double price_;
    std::int64_t period_ = 0;
    std::uint64_t next_order_id_ = 1;
    std::int64_t next_agent_id_ = 0;
    RunRecord record_;
};

/// Runs one simulation with the seed derived for `run_index`.
RunRecord run_single(const SimConfig& config, std::uint32_t run_index = 0);

struct RunFailure {
    std::uint32_t run_index = 0;
    std::string message;
};

struct EnsembleResult {
    std::vector<RunRecord> runs; // successful runs, ascending run_index
    std::vector<RunFailure> failures;

    // Aggregates over successful runs, recomputable from `runs` exactly.
    std::vector<double> mean_p_bid;    // length T+1
    std::vector<double> mean_n_shares;
    std::vector<double> mean_vol_pref;
    std::vector<double> mean_profit;
    std::vector<double> gamma;         // per-run spectral exponent, run order
    std::vector<double> gamma_running_mean;
};

/// Runs `config.n_runs` simulations with per-run seeds derived from
/// (config.seed, run_index). Results and aggregates are identical for any
/// `jobs` count; runs that fail (population extinction) are reported in
/// `failures` and the ensemble continues.
EnsembleResult run_ensemble(const SimConfig& config, int jobs = 1);

/// Recomputes the aggregate trajectories and the per-run spectral exponent
/// series of an ensemble from its member records.
void aggregate_ensemble(EnsembleResult& ensemble);

} // namespace evomarket
