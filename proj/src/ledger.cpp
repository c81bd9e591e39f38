#include "pm/ledger.hpp"

#include "pm/errors.hpp"

namespace pm {

std::int64_t Account::holding(const ContractRef& contract) const {
    auto it = holdings.find(contract);
    return it == holdings.end() ? 0 : it->second;
}

Account& Ledger::create_account(const std::string& trader_id, Money endowment) {
    if (trader_id.empty()) throw MarketError(ErrorCode::InvalidArgument, "empty trader id");
    if (endowment < Money{}) throw MarketError(ErrorCode::InvalidArgument, "negative endowment");
    Account account;
    account.trader_id = trader_id;
    account.endowment = endowment;
    account.cash = endowment;
    account.value_series.push_back({0, endowment.to_double()});
    auto [it, inserted] = accounts_.emplace(trader_id, std::move(account));
    if (!inserted) throw MarketError(ErrorCode::DuplicateId, "trader '" + trader_id + "' already has an account");
    return it->second;
}

const Account* Ledger::find(const std::string& trader_id) const {
    auto it = accounts_.find(trader_id);
    return it == accounts_.end() ? nullptr : &it->second;
}

const Account& Ledger::account(const std::string& trader_id) const {
    if (const Account* a = find(trader_id)) return *a;
    throw MarketError(ErrorCode::UnknownTrader, "unknown trader '" + trader_id + "'");
}

Account& Ledger::mutable_account(const std::string& trader_id) {
    auto it = accounts_.find(trader_id);
    if (it == accounts_.end()) throw MarketError(ErrorCode::UnknownTrader, "unknown trader '" + trader_id + "'");
    return it->second;
}

const TradeEvent& Ledger::record_trade(TradeEvent event) {
    if (event.seq != next_seq()) {
        throw MarketError(ErrorCode::ReplayGap, "trade seq " + std::to_string(event.seq) + " but expected " +
                                                    std::to_string(next_seq()));
    }
    if (event.qty <= 0) throw MarketError(ErrorCode::DegenerateOrder, "non-positive trade quantity");
    Account& account = mutable_account(event.trader_id);
    const ContractRef contract{event.idea_id, event.side};
    const std::int64_t held = account.holding(contract);
    const std::int64_t new_holding = event.direction == Direction::Buy ? held + event.qty : held - event.qty;
    const Money new_cash = account.cash - event.cash_delta;
    if (new_holding < 0) {
        throw MarketError(ErrorCode::InsufficientHoldings, "sell exceeds holdings",
                          Shortfall{static_cast<double>(event.qty), static_cast<double>(held)});
    }
    if (new_cash < Money{}) {
        throw MarketError(ErrorCode::InsufficientCash, "trade cost exceeds cash",
                          Shortfall{event.cash_delta.to_double(), account.cash.to_double()});
    }
    account.cash = new_cash;
    if (new_holding == 0) {
        account.holdings.erase(contract);
    } else {
        account.holdings[contract] = new_holding;
    }
    ++account.transaction_count;
    trades_.push_back(std::move(event));
    return trades_.back();
}

void Ledger::record_value(const std::string& trader_id, ValuePoint point) {
    mutable_account(trader_id).value_series.push_back(point);
}

void Ledger::redeem(const std::string& trader_id, Money amount) {
    Account& account = mutable_account(trader_id);
    account.cash += amount;
    account.holdings.clear();
}

Money Ledger::total_endowment() const {
    Money total;
    for (const auto& [id, a] : accounts_) total += a.endowment;
    return total;
}

Money Ledger::total_cash() const {
    Money total;
    for (const auto& [id, a] : accounts_) total += a.cash;
    return total;
}

}  // namespace pm
