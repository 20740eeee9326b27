#include "evomarket/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evomarket {

MechanismKind mechanism_from_string(const std::string& name) {
    if (name == "control") return MechanismKind::Control;
    if (name == "quantile") return MechanismKind::Quantile;
    if (name == "fps") return MechanismKind::FitnessProportionate;
    if (name == "mixed") return MechanismKind::Mixed;
    throw std::invalid_argument("unknown selection mechanism: " + name +
                                " (expected control|quantile|fps|mixed)");
}

std::string to_string(MechanismKind kind) {
    switch (kind) {
    case MechanismKind::Control: return "control";
    case MechanismKind::Quantile: return "quantile";
    case MechanismKind::FitnessProportionate: return "fps";
    case MechanismKind::Mixed: return "mixed";
    }
    return "unknown";
}

void SelectionConfig::validate(std::int64_t population_size) const {
    auto check_prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
        }
    };
    check_prob(p_selection, "selection.p_selection");
    check_prob(quantile_q, "selection.quantile_q");
    check_prob(mix_weight, "selection.mix_weight");
    check_prob(p_innovation, "selection.p_innovation");
    if (tournament_size < 1 || tournament_size > population_size) {
        throw std::invalid_argument("selection.tournament_size must lie in [1, n_agents]");
    }
}

std::vector<std::int64_t> quantile_select(const std::vector<AgentState>& population,
                                          double price, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0,1]");
    const auto n_remove = static_cast<std::size_t>(
        std::floor(q * static_cast<double>(population.size())));
    if (n_remove == 0) return {};

    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double pa = profit(population[a], price);
        const double pb = profit(population[b], price);
        if (pa != pb) return pa < pb;
        if (population[a].born_at != population[b].born_at) {
            return population[a].born_at < population[b].born_at;
        }
        return population[a].id < population[b].id;
    });

    std::vector<std::int64_t> removed;
    removed.reserve(n_remove);
    for (std::size_t i = 0; i < n_remove; ++i) removed.push_back(population[order[i]].id);
    return removed;
}

std::vector<std::int64_t> fitness_proportionate_select(
    const std::vector<AgentState>& population, double price,
    std::int64_t tournament_size, Rng& rng) {
    const auto n = static_cast<std::int64_t>(population.size());
    if (tournament_size > n) {
        throw std::invalid_argument("tournament size exceeds population");
    }

    // Partial Fisher-Yates over an index vector: uniform sample without
    // replacement, in draw order.
    std::vector<std::size_t> indices(population.size());
    std::iota(indices.begin(), indices.end(), 0);
    const auto k = static_cast<std::size_t>(tournament_size);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(indices.size() - i));
        std::swap(indices[i], indices[j]);
    }

    std::vector<double> fitness(k);
    for (std::size_t i = 0; i < k; ++i) fitness[i] = profit(population[indices[i]], price);

    // The share p_i = pi_i / sum pi_j is undefined when fitnesses can be
    // negative; shift the sample so its minimum is slightly above zero, which
    // preserves ordering. All-equal samples degrade to keep probability 1/|S|.
    const double min_fit = *std::min_element(fitness.begin(), fitness.end());
    if (min_fit < 0.0) {
        const double eps = 1e-9 * std::max(1.0, std::abs(min_fit));
        for (double& f : fitness) f += -min_fit + eps;
    }
    double total = std::accumulate(fitness.begin(), fitness.end(), 0.0);

    std::vector<std::int64_t> removed;
    for (std::size_t i = 0; i < k; ++i) {
        const double keep_prob =
            (total > 0.0 && std::isfinite(total)) ? fitness[i] / total : 1.0 / static_cast<double>(k);
        if (!(rng.uniform() < keep_prob)) removed.push_back(population[indices[i]].id);
    }
    return removed;
}

std::vector<std::int64_t> mixed_select(const std::vector<AgentState>& population,
                                       double price, const SelectionConfig& config,
                                       Rng& rng, MechanismKind& used) {
    if (rng.uniform() < config.mix_weight) {
        used = MechanismKind::Quantile;
        return quantile_select(population, price, config.quantile_q);
    }
    used = MechanismKind::FitnessProportionate;
    return fitness_proportionate_select(population, price, config.tournament_size, rng);
}

ReplacementOutcome replace(std::vector<AgentState>& population,
                           const std::vector<std::int64_t>& removed_ids,
                           const ParamPriors& priors, double p_innovation,
                           double initial_cash, std::int64_t initial_shares,
                           std::int64_t period, std::int64_t& next_agent_id, Rng& rng) {
    ReplacementOutcome outcome;
    if (removed_ids.empty()) return outcome;
    if (removed_ids.size() >= population.size()) throw ExtinctionError(period);

    // Collect the survivors' parameter marginals before mutating anything.
    std::vector<double> surv_p_bid;
    std::vector<double> surv_n_shares;
    std::vector<double> surv_vol_pref;
    surv_p_bid.reserve(population.size() - removed_ids.size());
    auto is_removed = [&](std::int64_t id) {
        return std::find(removed_ids.begin(), removed_ids.end(), id) != removed_ids.end();
    };
    for (const AgentState& agent : population) {
        if (is_removed(agent.id)) continue;
        surv_p_bid.push_back(agent.params.p_bid);
        surv_n_shares.push_back(agent.params.n_shares);
        surv_vol_pref.push_back(agent.params.vol_pref);
    }

    for (std::int64_t removed_id : removed_ids) {
        auto it = std::find_if(population.begin(), population.end(),
                               [&](const AgentState& a) { return a.id == removed_id; });
        outcome.cash_removed += it->cash;
        outcome.shares_removed += it->shares;

        AgentState fresh;
        fresh.id = next_agent_id++;
        fresh.cash = initial_cash;
        fresh.shares = initial_shares;
        fresh.born_at = period;
        const bool innovate = rng.uniform() < p_innovation;
        if (innovate) {
            fresh.params = priors.sample(rng);
        } else {
            // Independent resampling of each parameter from the survivor
            // marginals.
            fresh.params.p_bid = surv_p_bid[rng.below(surv_p_bid.size())];
            fresh.params.n_shares = surv_n_shares[rng.below(surv_n_shares.size())];
            fresh.params.vol_pref = surv_vol_pref[rng.below(surv_vol_pref.size())];
        }
        *it = fresh;

        outcome.replacement_ids.push_back(fresh.id);
        outcome.innovated.push_back(innovate);
        outcome.cash_injected += initial_cash;
        outcome.shares_injected += initial_shares;
    }
    return outcome;
}

SelectionOutcome maybe_select(std::vector<AgentState>& population, double price,
                              const SelectionConfig& config, const ParamPriors& priors,
                              double initial_cash, std::int64_t initial_shares,
                              std::int64_t period, std::int64_t& next_agent_id, Rng& rng) {
    if (population.empty()) throw std::invalid_argument("population must be nonempty");

    SelectionOutcome outcome;
    const bool triggered = rng.uniform() < config.p_selection;
    if (!triggered || config.kind == MechanismKind::Control) return outcome;

    MechanismKind used = config.kind;
    std::vector<std::int64_t> removed;
    switch (config.kind) {
    case MechanismKind::Quantile:
        removed = quantile_select(population, price, config.quantile_q);
        break;
    case MechanismKind::FitnessProportionate:
        removed = fitness_proportionate_select(population, price, config.tournament_size, rng);
        break;
    case MechanismKind::Mixed:
        removed = mixed_select(population, price, config, rng, used);
        break;
    case MechanismKind::Control:
        break;
    }

    outcome.replacement = replace(population, removed, priors, config.p_innovation,
                                  initial_cash, initial_shares, period, next_agent_id, rng);
    outcome.event_occurred = true;
    outcome.event.period = period;
    outcome.event.mechanism_used = used;
    outcome.event.removed_ids = std::move(removed);
    outcome.event.replacement_ids = outcome.replacement.replacement_ids;
    outcome.event.innovated = outcome.replacement.innovated;
    return outcome;
}

} // namespace evomarket
