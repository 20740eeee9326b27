#pragma once

#include <cstdint>
#include <optional>

#include "evomarket/distributions.hpp"
#include "evomarket/matching_engine.hpp"
#include "evomarket/rng.hpp"

namespace evomarket {

/// The three behavioral parameters of a zero-intelligence agent.
struct AgentParams {
    double p_bid = 0.5;    // probability of submitting a bid rather than an ask
    double n_shares = 0.0; // Poisson mean of the order size
    double vol_pref = 0.0; // half-width of the uniform price perturbation

    bool valid() const {
        return p_bid >= 0.0 && p_bid <= 1.0 && n_shares >= 0.0 && vol_pref >= 0.0;
    }
};

/// Agent portfolio and identity. Cash and shares may both go negative: agents
/// sell short and are not budget constrained.
struct AgentState {
    std::int64_t id = 0;
    AgentParams params;
    double cash = 0.0;
    std::int64_t shares = 0;
    std::int64_t born_at = 0;
};

/// Sampling distributions for the three parameters, used at t = 0 and for
/// innovation draws during replacement.
struct ParamPriors {
    DistSpec p_bid = DistSpec::uniform(0.0, 1.0);
    DistSpec n_shares = DistSpec::gamma(2.0, 5.0);
    DistSpec vol_pref = DistSpec::lognormal(0.0, 0.5);

    /// Draws a parameter triple, clamped into the valid domain.
    AgentParams sample(Rng& rng) const;
};

/// Agent fitness: mark-to-market portfolio value at the given price.
inline double profit(const AgentState& agent, double price) {
    return agent.cash + static_cast<double>(agent.shares) * price;
}

/// Draws one order around the current price: a bid with probability p_bid,
/// size Poisson(n_shares), limit price uniform on [price - vol_pref,
/// price + vol_pref] clamped below at the tick. A zero size draw produces no
/// order. Consumes, in order: the side draw, the size draws, and (only when
/// the size is positive) the price draw.
std::optional<Order> generate_order(const AgentState& agent, double price,
                                    std::int64_t period, Rng& rng);

/// Applies one fill to the agent's portfolio. A Bid fill buys (cash down,
/// shares up); an Ask fill mirrors.
void settle(AgentState& agent, Side side, std::int64_t quantity, double price);

} // namespace evomarket
