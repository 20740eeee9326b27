#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evomarket/agents.hpp"
#include "evomarket/rng.hpp"

namespace evomarket {

enum class MechanismKind : std::uint8_t { Control, Quantile, FitnessProportionate, Mixed };

MechanismKind mechanism_from_string(const std::string& name);
std::string to_string(MechanismKind kind);

struct SelectionConfig {
    MechanismKind kind = MechanismKind::Control;
    double p_selection = 1.0 / 24.0; // per-period probability of a selection event
    double quantile_q = 0.1;         // fraction removed by the quantile mechanism
    std::int64_t tournament_size = 10;
    double mix_weight = 0.5;   // probability the mixed mechanism picks quantile
    double p_innovation = 0.01;

    void validate(std::int64_t population_size) const;
};

/// One selection event: which agents left, who replaced them, and whether
/// each replacement drew from the priors (innovation) or from the survivor
/// marginals. Population size is conserved, so the two id lists have equal
/// length. `mechanism_used` records the branch that actually ran, never Mixed.
struct SelectionEvent {
    std::int64_t period = 0;
    MechanismKind mechanism_used = MechanismKind::Control;
    std::vector<std::int64_t> removed_ids;
    std::vector<std::int64_t> replacement_ids;
    std::vector<bool> innovated;
};

/// Thrown when a selection step removes every agent, leaving no survivors to
/// resample from.
struct ExtinctionError : std::runtime_error {
    explicit ExtinctionError(std::int64_t period)
        : std::runtime_error("population extinct at period " + std::to_string(period)),
          period(period) {}
    std::int64_t period;
};

/// Removes the floor(q * N) lowest-profit agents. Ties at the threshold are
/// broken by older born_at, then lower id. Returns agent ids.
std::vector<std::int64_t> quantile_select(const std::vector<AgentState>& population,
                                          double price, double q);

/// Draws a uniform sample of `tournament_size` agents without replacement,
/// then keeps each member independently with probability equal to its fitness
/// share inside the sample. Negative fitness in the sample is handled by
/// shifting all sampled fitnesses to be positive before normalizing; a
/// degenerate (all zero) sample keeps each member with probability 1/|S|.
std::vector<std::int64_t> fitness_proportionate_select(
    const std::vector<AgentState>& population, double price,
    std::int64_t tournament_size, Rng& rng);

/// One branch draw, then quantile (probability mix_weight) or
/// fitness-proportionate selection. Reports which branch ran via `used`.
std::vector<std::int64_t> mixed_select(const std::vector<AgentState>& population,
                                       double price, const SelectionConfig& config,
                                       Rng& rng, MechanismKind& used);

struct ReplacementOutcome {
    std::vector<std::int64_t> replacement_ids;
    std::vector<bool> innovated;
    double cash_injected = 0.0;
    std::int64_t shares_injected = 0;
    double cash_removed = 0.0;
    std::int64_t shares_removed = 0;
};

/// Replaces the removed agents in place. Each replacement draws its three
/// parameters from the priors with probability p_innovation, otherwise each
/// parameter independently from the empirical marginal over survivors. New
/// agents receive the default endowment and born_at = period.
ReplacementOutcome replace(std::vector<AgentState>& population,
                           const std::vector<std::int64_t>& removed_ids,
                           const ParamPriors& priors, double p_innovation,
                           double initial_cash, std::int64_t initial_shares,
                           std::int64_t period, std::int64_t& next_agent_id, Rng& rng);

struct SelectionOutcome {
    bool event_occurred = false;
    SelectionEvent event;
    ReplacementOutcome replacement;
};

/// Per-period selection hook. With probability p_selection dispatches to the
/// configured mechanism and replaces the removed agents; otherwise leaves the
/// population untouched. Control consumes the trigger draw but never removes
/// anyone and never emits an event. Randomness is consumed in a fixed order:
/// trigger, branch (mixed only), mechanism internals, replacement draws.
SelectionOutcome maybe_select(std::vector<AgentState>& population, double price,
                              const SelectionConfig& config, const ParamPriors& priors,
                              double initial_cash, std::int64_t initial_shares,
                              std::int64_t period, std::int64_t& next_agent_id, Rng& rng);

} // namespace evomarket
