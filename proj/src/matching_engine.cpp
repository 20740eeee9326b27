#include "evomarket/matching_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evomarket {

namespace {

// Priority comparators. Better-priced orders first; ties by age, then id.
bool bid_before(const Order& a, const Order& b) {
    if (a.price != b.price) return a.price > b.price;
    if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
    return a.id < b.id;
}

bool ask_before(const Order& a, const Order& b) {
    if (a.price != b.price) return a.price < b.price;
    if (a.submitted_at != b.submitted_at) return a.submitted_at < b.submitted_at;
    return a.id < b.id;
}

// Shuffles each maximal run of orders sharing (price, submitted_at). Price
// and age priority are already settled by the book ordering; this implements
// the uniform random tie-break for whatever ties remain.
void shuffle_equal_priority_runs(std::vector<Order>& orders, Rng& rng) {
    std::size_t start = 0;
    while (start < orders.size()) {
        std::size_t end = start + 1;
        while (end < orders.size() && orders[end].price == orders[start].price &&
               orders[end].submitted_at == orders[start].submitted_at) {
            ++end;
        }
        if (end - start > 1) {
            rng.shuffle(std::span<Order>(orders.data() + start, end - start));
        }
        start = end;
    }
}

} // namespace

void OrderBook::submit(const Order& order) {
    if (!(order.price > 0.0) || !std::isfinite(order.price)) {
        throw std::invalid_argument("order price must be positive and finite");
    }
    if (order.quantity <= 0) {
        throw std::invalid_argument("order quantity must be positive");
    }
    if (order.side == Side::Bid) {
        auto pos = std::upper_bound(bids_.begin(), bids_.end(), order, bid_before);
        bids_.insert(pos, order);
    } else {
        auto pos = std::upper_bound(asks_.begin(), asks_.end(), order, ask_before);
        asks_.insert(pos, order);
    }
}

ClearingResult OrderBook::clear_batch(double prev_price, std::int64_t period, Rng& rng) {
    (void)period;
    if (!(prev_price > 0.0)) {
        throw std::invalid_argument("previous price must be positive");
    }

    ClearingResult result;
    result.new_price = prev_price;
    if (bids_.empty() || asks_.empty()) return result;

    // Candidate prices: the union of all quoted limits. min(demand, supply)
    // is piecewise constant between quotes, so the maximum is attained here.
    std::vector<double> candidates;
    candidates.reserve(bids_.size() + asks_.size());
    for (const auto& o : bids_) candidates.push_back(o.price);
    for (const auto& o : asks_) candidates.push_back(o.price);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // demand(p): total bid quantity with limit >= p, non-increasing in p.
    // supply(p): total ask quantity with limit <= p, non-decreasing in p.
    const std::size_t n = candidates.size();
    std::vector<std::int64_t> demand(n, 0);
    std::vector<std::int64_t> supply(n, 0);
    {
        // Bids are sorted by descending price: walk candidates from the top.
        std::size_t bi = 0;
        std::int64_t acc = 0;
        for (std::size_t ci = n; ci-- > 0;) {
            while (bi < bids_.size() && bids_[bi].price >= candidates[ci]) {
                acc += bids_[bi].quantity;
                ++bi;
            }
            demand[ci] = acc;
        }
        std::size_t ai = 0;
        acc = 0;
        for (std::size_t ci = 0; ci < n; ++ci) {
            while (ai < asks_.size() && asks_[ai].price <= candidates[ci]) {
                acc += asks_[ai].quantity;
                ++ai;
            }
            supply[ci] = acc;
        }
    }

    std::int64_t best_volume = 0;
    for (std::size_t ci = 0; ci < n; ++ci) {
        best_volume = std::max(best_volume, std::min(demand[ci], supply[ci]));
    }
    if (best_volume == 0) return result;

    // The maximizing candidates form a contiguous interval (min of a
    // non-increasing and a non-decreasing function is unimodal); clear at its
    // midpoint, which keeps the tie symmetric between sides.
    double lo = 0.0;
    double hi = 0.0;
    bool seen = false;
    for (std::size_t ci = 0; ci < n; ++ci) {
        if (std::min(demand[ci], supply[ci]) == best_volume) {
            if (!seen) lo = candidates[ci];
            hi = candidates[ci];
            seen = true;
        }
    }
    double clearing_price = 0.5 * (lo + hi);
    if (clearing_price < kPriceTick) {
        clearing_price = kPriceTick;
        result.price_floored = true;
    }

    // Eligible orders are exactly a prefix of each side's priority ordering.
    // Detach those prefixes, apply the random tie-break within equal
    // (price, age) runs, and match.
    std::size_t n_eligible_bids = 0;
    while (n_eligible_bids < bids_.size() && bids_[n_eligible_bids].price >= clearing_price) {
        ++n_eligible_bids;
    }
    std::size_t n_eligible_asks = 0;
    while (n_eligible_asks < asks_.size() && asks_[n_eligible_asks].price <= clearing_price) {
        ++n_eligible_asks;
    }
    std::vector<Order> eligible_bids(bids_.begin(), bids_.begin() + n_eligible_bids);
    std::vector<Order> eligible_asks(asks_.begin(), asks_.begin() + n_eligible_asks);
    shuffle_equal_priority_runs(eligible_bids, rng);
    shuffle_equal_priority_runs(eligible_asks, rng);

    // Two-pointer match of exactly best_volume shares at the uniform price.
    // Each side's eligible quantity is at least best_volume, so the walk
    // never runs off the end.
    std::vector<Fill> fills;
    std::int64_t remaining = best_volume;
    std::size_t bi = 0;
    std::size_t ai = 0;
    while (remaining > 0) {
        Order& bid = eligible_bids[bi];
        Order& ask = eligible_asks[ai];
        const std::int64_t qty = std::min({bid.quantity, ask.quantity, remaining});
        fills.push_back({bid.id, ask.id, bid.agent_id, ask.agent_id, qty, clearing_price});
        bid.quantity -= qty;
        ask.quantity -= qty;
        remaining -= qty;
        if (bid.quantity == 0) ++bi;
        if (ask.quantity == 0) ++ai;
    }

    // Filled orders leave; residuals rest with their original timestamps, in
    // book priority order.
    auto rebuild_prefix = [](std::vector<Order>& side, std::vector<Order>& touched,
                             std::size_t prefix_len, auto&& before) {
        std::erase_if(touched, [](const Order& o) { return o.quantity == 0; });
        std::sort(touched.begin(), touched.end(), before);
        side.erase(side.begin(), side.begin() + static_cast<std::ptrdiff_t>(prefix_len));
        side.insert(side.begin(), touched.begin(), touched.end());
    };
    rebuild_prefix(bids_, eligible_bids, n_eligible_bids, bid_before);
    rebuild_prefix(asks_, eligible_asks, n_eligible_asks, ask_before);

    result.clearing_price = clearing_price;
    result.executed_volume = best_volume;
    result.fills = std::move(fills);
    result.new_price = clearing_price;
    return result;
}

void OrderBook::evict_stale(std::int64_t period) {
    auto stale = [&](const Order& o) { return period - o.submitted_at > max_age_; };
    std::erase_if(bids_, stale);
    std::erase_if(asks_, stale);
}

void OrderBook::cancel_agents(std::span<const std::int64_t> agent_ids) {
    auto owned = [&](const Order& o) {
        return std::find(agent_ids.begin(), agent_ids.end(), o.agent_id) != agent_ids.end();
    };
    std::erase_if(bids_, owned);
    std::erase_if(asks_, owned);
}

} // namespace evomarket
