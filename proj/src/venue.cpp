#include "pm/venue.hpp"

#include "pm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pm {

std::optional<ElasticityPreset> find_preset(std::string_view name) {
    for (const auto& preset : kElasticityPresets) {
        if (preset.name == name) return preset;
    }
    return std::nullopt;
}

Venue::Venue(std::string venue_id, Design design, std::vector<IdeaContract> ideas, double b, Money payout_per_share)
    : id_(std::move(venue_id)), design_(design), ideas_(std::move(ideas)), b_(b), payout_(payout_per_share) {
    if (id_.empty()) throw MarketError(ErrorCode::InvalidArgument, "empty venue id");
    if (ideas_.size() < 2) throw MarketError(ErrorCode::InvalidArgument, "a venue needs at least two ideas");
    if (!(b > 0.0) || !std::isfinite(b)) throw MarketError(ErrorCode::InvalidArgument, "b must be finite and > 0");
    if (payout_ <= Money{}) throw MarketError(ErrorCode::InvalidArgument, "payout per share must be positive");
    for (std::size_t i = 0; i < ideas_.size(); ++i) {
        if (!index_.emplace(ideas_[i].idea_id, i).second) {
            throw MarketError(ErrorCode::DuplicateId, "duplicate idea_id '" + ideas_[i].idea_id + "'");
        }
    }
    if (design_ == Design::Single) {
        markets_.emplace_back(b_, ideas_.size());
    } else {
        markets_.assign(ideas_.size(), lmsr::LmsrState(b_, 2));
    }
    collected_.assign(markets_.size(), Money{});
}

const IdeaContract& Venue::idea(const std::string& idea_id) const {
    auto it = index_.find(idea_id);
    if (it == index_.end()) throw MarketError(ErrorCode::UnknownContract, "unknown idea '" + idea_id + "'");
    return ideas_[it->second];
}

bool Venue::valid(const ContractRef& contract) const noexcept {
    if (!index_.contains(contract.idea_id)) return false;
    return design_ == Design::Single ? contract.side == Side::Idea : contract.side != Side::Idea;
}

Venue::Slot Venue::locate(const ContractRef& contract) const {
    auto it = index_.find(contract.idea_id);
    if (it == index_.end() || !valid(contract)) {
        throw MarketError(ErrorCode::UnknownContract, "unknown contract " + contract.idea_id + "/" +
                                                          std::string(to_string(contract.side)) + " on " +
                                                          std::string(to_string(design_)) + " venue");
    }
    if (design_ == Design::Single) return {0, it->second};
    return {it->second, contract.side == Side::Top ? std::size_t{0} : std::size_t{1}};
}

std::vector<ContractRef> Venue::contracts() const {
    std::vector<ContractRef> out;
    for (const auto& idea : ideas_) {
        if (design_ == Design::Single) {
            out.push_back({idea.idea_id, Side::Idea});
        } else {
            out.push_back({idea.idea_id, Side::Top});
            out.push_back({idea.idea_id, Side::Flop});
        }
    }
    return out;
}

double Venue::price(const ContractRef& contract) const {
    const Slot slot = locate(contract);
    return lmsr::price(markets_[slot.market], slot.outcome);
}

std::vector<ContractPrice> Venue::changed_prices(std::size_t market, const lmsr::LmsrState& state) const {
    const auto p = lmsr::prices(state);
    std::vector<ContractPrice> out;
    if (design_ == Design::Single) {
        out.reserve(ideas_.size());
        for (std::size_t i = 0; i < ideas_.size(); ++i) out.push_back({ideas_[i].idea_id, Side::Idea, p[i]});
    } else {
        const auto& id = ideas_[market].idea_id;
        out.push_back({id, Side::Top, p[0]});
        out.push_back({id, Side::Flop, p[1]});
    }
    return out;
}

std::vector<ContractPrice> Venue::price_snapshot() const {
    std::vector<ContractPrice> out;
    for (std::size_t m = 0; m < markets_.size(); ++m) {
        auto part = changed_prices(m, markets_[m]);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

void Venue::require_open() const {
    if (settled()) throw MarketError(ErrorCode::VenueSettled, "venue '" + id_ + "' is settled");
}

Quote Venue::quote(const ContractRef& contract, Direction direction, std::int64_t quantity) const {
    require_open();
    const Slot slot = locate(contract);
    if (quantity < 1) throw MarketError(ErrorCode::DegenerateOrder, "order quantity must be a positive integer");
    const double delta = direction == Direction::Buy ? static_cast<double>(quantity) : -static_cast<double>(quantity);
    const auto& state = markets_[slot.market];

    Quote q;
    q.cash_delta = payout_.to_double() * lmsr::trade_cost(state, slot.outcome, delta);
    q.charge = Money::from_double(q.cash_delta);
    lmsr::LmsrState after = state;
    after.apply(slot.outcome, delta);
    q.prices_after = changed_prices(slot.market, after);
    return q;
}

Fill Venue::execute(Ledger& ledger, const Order& order, std::int64_t ts) {
    require_open();
    if (ledger.venue_id() != id_) throw MarketError(ErrorCode::UnknownVenue, "ledger belongs to another venue");
    const Account& account = ledger.account(order.trader_id);
    const Slot slot = locate(order.contract);
    Quote q = quote(order.contract, order.direction, order.quantity);

    if (order.direction == Direction::Buy && q.charge > account.cash) {
        throw MarketError(ErrorCode::InsufficientCash,
                          "buy costs " + q.charge.str() + " but only " + account.cash.str() + " available",
                          Shortfall{q.charge.to_double(), account.cash.to_double()});
    }
    if (order.direction == Direction::Sell && account.holding(order.contract) < order.quantity) {
        throw MarketError(ErrorCode::InsufficientHoldings,
                          "sell of " + std::to_string(order.quantity) + " exceeds holding of " +
                              std::to_string(account.holding(order.contract)),
                          Shortfall{static_cast<double>(order.quantity),
                                    static_cast<double>(account.holding(order.contract))});
    }

    TradeEvent event;
    event.seq = ledger.next_seq();
    event.ts = ts;
    event.venue_id = id_;
    event.trader_id = order.trader_id;
    event.idea_id = order.contract.idea_id;
    event.side = order.contract.side;
    event.direction = order.direction;
    event.qty = order.quantity;
    event.cash_delta = q.charge;
    event.prices_after = std::move(q.prices_after);

    // First mutation; everything after it cannot fail.
    const TradeEvent& recorded = ledger.record_trade(std::move(event));
    markets_[slot.market].apply(slot.outcome, order.direction == Direction::Buy ? static_cast<double>(order.quantity)
                                                                               : -static_cast<double>(order.quantity));
    collected_[slot.market] += recorded.cash_delta;
    const Account& updated = ledger.account(order.trader_id);
    ledger.record_value(order.trader_id, {recorded.seq, portfolio_value(updated)});
    return Fill{recorded, updated.cash};
}

Ranking Venue::final_ranking() const {
    std::vector<std::pair<double, const std::string*>> scored;
    scored.reserve(ideas_.size());
    if (design_ == Design::Single) {
        const auto p = lmsr::prices(markets_[0]);
        for (std::size_t i = 0; i < ideas_.size(); ++i) scored.emplace_back(p[i], &ideas_[i].idea_id);
    } else {
        for (std::size_t i = 0; i < ideas_.size(); ++i) scored.emplace_back(lmsr::price(markets_[i], 0), &ideas_[i].idea_id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
    });
    std::vector<std::string> order;
    order.reserve(scored.size());
    for (const auto& [p, id] : scored) order.push_back(*id);
    return Ranking::from_order(order);
}

Settlement Venue::settle(Ledger& ledger, const GroundTruth& truth, std::size_t k) {
    require_open();
    if (ledger.venue_id() != id_) throw MarketError(ErrorCode::UnknownVenue, "ledger belongs to another venue");
    if (truth.size() != ideas_.size()) {
        throw MarketError(ErrorCode::TruthMismatch, "ground truth covers " + std::to_string(truth.size()) +
                                                        " ideas, venue has " + std::to_string(ideas_.size()));
    }
    for (const auto& idea : ideas_) {
        if (!truth.quality().contains(idea.idea_id)) {
            throw MarketError(ErrorCode::TruthMismatch, "ground truth lacks idea '" + idea.idea_id + "'");
        }
    }
    if (k < 1 || k > ideas_.size()) throw MarketError(ErrorCode::InvalidArgument, "k must be in 1..n");

    Settlement result;
    result.k = k;
    result.top_k = truth.top_k(k);
    for (const auto& [trader_id, account] : ledger.accounts()) {
        std::int64_t winning_shares = 0;
        for (const auto& [contract, shares] : account.holdings) {
            const bool in_top = result.top_k.contains(contract.idea_id);
            const bool wins = contract.side == Side::Flop ? !in_top : in_top;
            if (wins) winning_shares += shares;
        }
        result.payouts[trader_id] = payout_ * winning_shares;
    }
    for (const auto& [trader_id, amount] : result.payouts) ledger.redeem(trader_id, amount);
    settlement_ = result;
    return result;
}

double Venue::portfolio_value(const Account& account) const {
    double value = account.cash.to_double();
    for (const auto& [contract, shares] : account.holdings) {
        value += static_cast<double>(shares) * price(contract) * payout_.to_double();
    }
    return value;
}

}  // namespace pm
