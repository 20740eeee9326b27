#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evomarket/rng.hpp"

namespace evomarket {

/// Smallest representable price increment. Order prices and clearing prices
/// are floored here so log-returns stay defined.
inline constexpr double kPriceTick = 1e-6;

enum class Side : std::uint8_t { Bid, Ask };

/// A resting limit order. `quantity` is the remaining unfilled amount and is
/// always positive while the order rests in the book.
struct Order {
    std::uint64_t id = 0;
    std::int64_t agent_id = 0;
    Side side = Side::Bid;
    double price = 0.0;
    std::int64_t quantity = 0;
    std::int64_t submitted_at = 0;
};

/// One execution produced by a batch cross. Both legs trade `quantity` shares
/// at the uniform `price`.
struct Fill {
    std::uint64_t bid_order_id = 0;
    std::uint64_t ask_order_id = 0;
    std::int64_t bid_agent_id = 0;
    std::int64_t ask_agent_id = 0;
    std::int64_t quantity = 0;
    double price = 0.0;
};

/// Outcome of one batch auction. `clearing_price` is absent when no cross
/// occurred; `new_price` then carries the previous market price forward.
struct ClearingResult {
    std::optional<double> clearing_price;
    std::int64_t executed_volume = 0;
    std::vector<Fill> fills;
    double new_price = 0.0;
    bool price_floored = false;
};

/// Double-sided order book for a frequent batch auction.
///
/// Resting orders are kept in execution priority: bids by descending price,
/// asks by ascending price, ties by submission period then order id. A batch
/// cross executes all eligible orders at a single uniform price; ties that
/// survive price and age are broken by uniform random selection using the
/// caller's seeded randomness.
class OrderBook {
public:
    explicit OrderBook(std::int64_t max_age = 24) : max_age_(max_age) {}

    /// Inserts an order at its priority position. Rejects non-positive price
    /// or quantity, which signals malformed agent output upstream.
    void submit(const Order& order);

    /// Runs one uniform-price batch auction at `period`.
    ///
    /// The executed volume is the maximum over candidate prices (the union of
    /// all quoted limits) of min(demand(p), supply(p)). The clearing price is
    /// the midpoint of the price interval attaining that maximum. Partially
    /// filled orders keep their original timestamp.
    ClearingResult clear_batch(double prev_price, std::int64_t period, Rng& rng);

    /// Removes every order with period - submitted_at > max_age.
    void evict_stale(std::int64_t period);

    /// Removes all resting orders owned by the given agents.
    void cancel_agents(std::span<const std::int64_t> agent_ids);

    const std::vector<Order>& bids() const { return bids_; }
    const std::vector<Order>& asks() const { return asks_; }
    std::int64_t max_age() const { return max_age_; }
    std::size_t size() const { return bids_.size() + asks_.size(); }
    bool empty() const { return bids_.empty() && asks_.empty(); }

private:
    std::vector<Order> bids_; // descending price, ascending time, ascending id
    std::vector<Order> asks_; // ascending price, ascending time, ascending id
    std::int64_t max_age_;
};

} // namespace evomarket
