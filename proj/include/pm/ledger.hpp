#pragma once

// Trader accounts and the per-venue trade record.

#include "pm/money.hpp"
#include "pm/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pm {

inline constexpr Money kDefaultEndowment = Money::whole(5000);

struct ValuePoint {
    std::int64_t seq = 0;  // 0 = account creation
    double value = 0.0;

    friend bool operator==(const ValuePoint&, const ValuePoint&) = default;
};

struct Account {
    std::string trader_id;
    Money endowment;
    Money cash;
    std::map<ContractRef, std::int64_t> holdings;  // only strictly positive entries are kept
    std::int64_t transaction_count = 0;
    std::vector<ValuePoint> value_series;

    std::int64_t holding(const ContractRef& contract) const;

    friend bool operator==(const Account&, const Account&) = default;
};

/// One executed order. `cash_delta` is what the trader paid (negative when
/// the trader received cash on a sale), already rounded to ledger precision.
struct TradeEvent {
    std::int64_t seq = 0;
    std::int64_t ts = 0;
    std::string venue_id;
    std::string trader_id;
    std::string idea_id;
    Side side = Side::Idea;
    Direction direction = Direction::Buy;
    std::int64_t qty = 0;
    Money cash_delta;
    std::vector<ContractPrice> prices_after;  // only the contracts whose price changed

    friend bool operator==(const TradeEvent&, const TradeEvent&) = default;
};

/// Accounts and trades of one venue. Trade seqs start at 1 and are gapless.
class Ledger {
public:
    explicit Ledger(std::string venue_id) : venue_id_(std::move(venue_id)) {}

    const std::string& venue_id() const noexcept { return venue_id_; }

    /// Rejects duplicate ids and negative endowments.
    Account& create_account(const std::string& trader_id, Money endowment = kDefaultEndowment);
    const Account& account(const std::string& trader_id) const;
    const Account* find(const std::string& trader_id) const;
    const std::map<std::string, Account>& accounts() const noexcept { return accounts_; }

    std::span<const TradeEvent> trades() const noexcept { return trades_; }
    std::int64_t last_seq() const noexcept { return static_cast<std::int64_t>(trades_.size()); }
    std::int64_t next_seq() const noexcept { return last_seq() + 1; }

    /// Applies a validated trade to the trader's account and appends it.
    /// The event must carry seq == next_seq(); cash and holdings stay >= 0.
    const TradeEvent& record_trade(TradeEvent event);
    void record_value(const std::string& trader_id, ValuePoint point);
    /// Settlement: credits `amount` and redeems (clears) all holdings.
    void redeem(const std::string& trader_id, Money amount);

    Money total_endowment() const;
    Money total_cash() const;

    friend bool operator==(const Ledger&, const Ledger&) = default;

private:
    Account& mutable_account(const std::string& trader_id);

    std::string venue_id_;
    std::map<std::string, Account> accounts_;
    std::vector<TradeEvent> trades_;
};

}  // namespace pm
