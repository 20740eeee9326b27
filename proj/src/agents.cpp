#include "evomarket/agents.hpp"

#include <algorithm>
#include <stdexcept>

namespace evomarket {

AgentParams ParamPriors::sample(Rng& rng) const {
    AgentParams params;
    params.p_bid = std::clamp(p_bid.sample(rng), 0.0, 1.0);
    params.n_shares = std::max(0.0, n_shares.sample(rng));
    params.vol_pref = std::max(0.0, vol_pref.sample(rng));
    return params;
}

std::optional<Order> generate_order(const AgentState& agent, double price,
                                    std::int64_t period, Rng& rng) {
    if (!(price > 0.0)) throw std::invalid_argument("market price must be positive");

    const Side side = rng.bernoulli(agent.params.p_bid) ? Side::Bid : Side::Ask;
    const std::int64_t quantity = rng.poisson(agent.params.n_shares);
    if (quantity == 0) return std::nullopt;

    const double u = rng.uniform(-1.0, 1.0);
    const double limit = std::max(price + agent.params.vol_pref * u, kPriceTick);

    Order order;
    order.agent_id = agent.id;
    order.side = side;
    order.price = limit;
    order.quantity = quantity;
    order.submitted_at = period;
    return order;
}

void settle(AgentState& agent, Side side, std::int64_t quantity, double price) {
    if (quantity <= 0) throw std::invalid_argument("fill quantity must be positive");
    if (!(price > 0.0)) throw std::invalid_argument("fill price must be positive");
    const double cash_leg = static_cast<double>(quantity) * price;
    if (side == Side::Bid) {
        agent.cash -= cash_leg;
        agent.shares += quantity;
    } else {
        agent.cash += cash_leg;
        agent.shares -= quantity;
    }
}

} // namespace evomarket
