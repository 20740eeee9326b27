#include "evomarket/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>

#include "evomarket/analysis.hpp"

namespace evomarket {

void SimConfig::validate() const {
    if (n_agents < 1) throw std::invalid_argument("n_agents must be >= 1");
    if (periods_per_day < 1) throw std::invalid_argument("periods_per_day must be >= 1");
    if (days < 0) throw std::invalid_argument("days must be >= 0");
    if (!(initial_price >= kPriceTick))
        throw std::invalid_argument("initial_price must be >= the price tick");
    if (!(initial_cash >= 0.0)) throw std::invalid_argument("initial_cash must be >= 0");
    if (initial_shares < 0) throw std::invalid_argument("initial_shares must be >= 0");
    if (!(p_trade >= 0.0 && p_trade <= 1.0))
        throw std::invalid_argument("p_trade must be in [0, 1]");
    if (max_order_age < 0) throw std::invalid_argument("max_order_age must be >= 0");
    if (param_sample_stride < 0)
        throw std::invalid_argument("param_sample_stride must be >= 0");
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
    selection.validate(n_agents);
}

namespace {

struct SnapshotStats {
    double mean_p_bid = 0.0, sd_p_bid = 0.0;
    double mean_n_shares = 0.0, sd_n_shares = 0.0;
    double mean_vol_pref = 0.0, sd_vol_pref = 0.0;
    double mean_profit = 0.0;
};

// Cross-agent means and population standard deviations of the three
// parameters, plus mean mark-to-market profit at `price`.
SnapshotStats snapshot(const std::vector<AgentState>& population, double price) {
    SnapshotStats s;
    const double n = static_cast<double>(population.size());
    for (const AgentState& a : population) {
        s.mean_p_bid += a.params.p_bid;
        s.mean_n_shares += a.params.n_shares;
        s.mean_vol_pref += a.params.vol_pref;
        s.mean_profit += profit(a, price);
    }
    s.mean_p_bid /= n;
    s.mean_n_shares /= n;
    s.mean_vol_pref /= n;
    s.mean_profit /= n;
    double v_p = 0.0, v_n = 0.0, v_v = 0.0;
    for (const AgentState& a : population) {
        const double dp = a.params.p_bid - s.mean_p_bid;
        const double dn = a.params.n_shares - s.mean_n_shares;
        const double dv = a.params.vol_pref - s.mean_vol_pref;
        v_p += dp * dp;
        v_n += dn * dn;
        v_v += dv * dv;
    }
    s.sd_p_bid = std::sqrt(v_p / n);
    s.sd_n_shares = std::sqrt(v_n / n);
    s.sd_vol_pref = std::sqrt(v_v / n);
    return s;
}

} // namespace

MarketSim::MarketSim(const SimConfig& config, std::uint64_t seed, std::uint32_t run_index)
    : config_(config),
      rng_(seed),
      book_(config.max_order_age),
      price_(config.initial_price) {
    config_.validate();
    population_.reserve(static_cast<std::size_t>(config_.n_agents));
    for (std::int64_t i = 0; i < config_.n_agents; ++i) {
        AgentState agent;
        agent.id = i;
        agent.params = config_.priors.sample(rng_);
        agent.cash = config_.initial_cash;
        agent.shares = config_.initial_shares;
        agent.born_at = 0;
        population_.push_back(agent);
    }
    next_agent_id_ = config_.n_agents;

    const std::int64_t total = config_.total_periods();
    record_.run_index = run_index;
    record_.run_seed = seed;
    record_.price.reserve(static_cast<std::size_t>(total) + 1);
    record_.returns.reserve(static_cast<std::size_t>(total));
    record_.mean_p_bid.reserve(static_cast<std::size_t>(total) + 1);
    record_.sd_p_bid.reserve(static_cast<std::size_t>(total) + 1);
    record_.mean_n_shares.reserve(static_cast<std::size_t>(total) + 1);
    record_.sd_n_shares.reserve(static_cast<std::size_t>(total) + 1);
    record_.mean_vol_pref.reserve(static_cast<std::size_t>(total) + 1);
    record_.sd_vol_pref.reserve(static_cast<std::size_t>(total) + 1);
    record_.mean_profit.reserve(static_cast<std::size_t>(total) + 1);
    record_.volume.reserve(static_cast<std::size_t>(total) + 1);
    record_.cash_injected.reserve(static_cast<std::size_t>(total) + 1);
    record_.shares_injected.reserve(static_cast<std::size_t>(total) + 1);

    record_period(0, 0.0, 0); // t = 0 snapshot, before any trading
}

void MarketSim::record_period(std::int64_t executed_volume, double cash_injected,
                              std::int64_t shares_injected) {
    const std::int64_t t = static_cast<std::int64_t>(record_.price.size());
    if (config_.param_sample_stride > 0 && t % config_.param_sample_stride == 0) {
        ParamSample sample;
        sample.period = t;
        sample.values.reserve(population_.size());
        for (const AgentState& a : population_) sample.values.push_back(a.params);
        record_.param_samples.push_back(std::move(sample));
    }
    const SnapshotStats s = snapshot(population_, price_);
    if (!record_.price.empty())
        record_.returns.push_back(std::log10(price_) - std::log10(record_.price.back()));
    record_.price.push_back(price_);
    record_.mean_p_bid.push_back(s.mean_p_bid);
    record_.sd_p_bid.push_back(s.sd_p_bid);
    record_.mean_n_shares.push_back(s.mean_n_shares);
    record_.sd_n_shares.push_back(s.sd_n_shares);
    record_.mean_vol_pref.push_back(s.mean_vol_pref);
    record_.sd_vol_pref.push_back(s.sd_vol_pref);
    record_.mean_profit.push_back(s.mean_profit);
    record_.volume.push_back(executed_volume);
    record_.cash_injected.push_back(cash_injected);
    record_.shares_injected.push_back(shares_injected);
}

void MarketSim::step() {
    const std::int64_t t = period_ + 1;

    // 1. Evict resting orders older than max_age.
    book_.evict_stale(t);

    // 2. Every agent may submit one order. Randomness per agent, in order:
    //    the act gate, then generate_order's documented draws.
    for (const AgentState& agent : population_) {
        if (!rng_.bernoulli(config_.p_trade)) continue;
        std::optional<Order> order = generate_order(agent, price_, t, rng_);
        if (!order) continue;
        order->id = next_order_id_++;
        book_.submit(*order);
    }

    // 3. One uniform-price batch auction.
    ClearingResult result = book_.clear_batch(price_, t, rng_);

    // 4. Settle both legs of every fill.
    if (!result.fills.empty()) {
        std::unordered_map<std::int64_t, std::size_t> index;
        index.reserve(population_.size());
        for (std::size_t i = 0; i < population_.size(); ++i)
            index.emplace(population_[i].id, i);
        for (const Fill& fill : result.fills) {
            settle(population_[index.at(fill.bid_agent_id)], Side::Bid, fill.quantity,
                   fill.price);
            settle(population_[index.at(fill.ask_agent_id)], Side::Ask, fill.quantity,
                   fill.price);
        }
    }

    // 5. Price update and recording happen before selection, so the recorded
    //    statistics cover exactly the agents active this period.
    price_ = result.new_price;
    if (result.price_floored) ++record_.price_floor_events;
    record_period(result.executed_volume, 0.0, 0);

    // 6. Selection hook. Removed agents' resting orders are cancelled; the
    //    re-endowment is attributed to this period's record row.
    SelectionOutcome outcome =
        maybe_select(population_, price_, config_.selection, config_.priors,
                     config_.initial_cash, config_.initial_shares, t, next_agent_id_, rng_);
    if (outcome.event_occurred) {
        if (!outcome.event.removed_ids.empty())
            book_.cancel_agents(outcome.event.removed_ids);
        record_.cash_injected.back() = outcome.replacement.cash_injected;
        record_.shares_injected.back() = outcome.replacement.shares_injected;
        record_.events.push_back(std::move(outcome.event));
    }

    period_ = t;
}

RunRecord MarketSim::run() {
    const std::int64_t total = config_.total_periods();
    while (period_ < total) step();
    return record_;
}

RunRecord run_single(const SimConfig& config, std::uint32_t run_index) {
    MarketSim sim(config, derive_seed(config.seed, run_index), run_index);
    return sim.run();
}

EnsembleResult run_ensemble(const SimConfig& config, int jobs) {
    config.validate();
    const std::uint32_t n_runs = static_cast<std::uint32_t>(config.n_runs);
    std::vector<std::optional<RunRecord>> slots(n_runs);
    std::vector<std::optional<RunFailure>> failure_slots(n_runs);

    const unsigned workers = static_cast<unsigned>(
        std::min<std::int64_t>(std::max(jobs, 1), config.n_runs));
    std::atomic<std::uint32_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::uint32_t i = next.fetch_add(1);
            if (i >= n_runs) return;
            try {
                slots[i] = run_single(config, i);
            } catch (const std::exception& e) {
                failure_slots[i] = RunFailure{i, e.what()};
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    EnsembleResult ensemble;
    for (std::uint32_t i = 0; i < n_runs; ++i) {
        if (slots[i]) ensemble.runs.push_back(std::move(*slots[i]));
        if (failure_slots[i]) ensemble.failures.push_back(std::move(*failure_slots[i]));
    }
    aggregate_ensemble(ensemble);
    return ensemble;
}

void aggregate_ensemble(EnsembleResult& ensemble) {
    ensemble.mean_p_bid.clear();
    ensemble.mean_n_shares.clear();
    ensemble.mean_vol_pref.clear();
    ensemble.mean_profit.clear();
    ensemble.gamma.clear();
    ensemble.gamma_running_mean.clear();
    if (ensemble.runs.empty()) return;

    const std::size_t len = ensemble.runs.front().price.size();
    ensemble.mean_p_bid.assign(len, 0.0);
    ensemble.mean_n_shares.assign(len, 0.0);
    ensemble.mean_vol_pref.assign(len, 0.0);
    ensemble.mean_profit.assign(len, 0.0);
    for (const RunRecord& run : ensemble.runs) {
        for (std::size_t t = 0; t < len; ++t) {
            ensemble.mean_p_bid[t] += run.mean_p_bid[t];
            ensemble.mean_n_shares[t] += run.mean_n_shares[t];
            ensemble.mean_vol_pref[t] += run.mean_vol_pref[t];
            ensemble.mean_profit[t] += run.mean_profit[t];
        }
    }
    const double n = static_cast<double>(ensemble.runs.size());
    for (std::size_t t = 0; t < len; ++t) {
        ensemble.mean_p_bid[t] /= n;
        ensemble.mean_n_shares[t] /= n;
        ensemble.mean_vol_pref[t] /= n;
        ensemble.mean_profit[t] /= n;
    }

    ensemble.gamma.reserve(ensemble.runs.size());
    ensemble.gamma_running_mean.reserve(ensemble.runs.size());
    double gamma_sum = 0.0;
    for (const RunRecord& run : ensemble.runs) {
        const PsdFit fit = fit_psd_exponent(psd(run.price));
        ensemble.gamma.push_back(fit.gamma);
        gamma_sum += fit.gamma;
        ensemble.gamma_running_mean.push_back(gamma_sum /
                                              static_cast<double>(ensemble.gamma.size()));
    }
}

} // namespace evomarket
