#pragma once

// Event-sourced container for venues and their ledgers.
//
// Every state change (venue opened, account created, trade, settlement) is
// written as one JSON object per line to the attached log. Replaying that log
// through `Exchange::replay` rebuilds the same inventories, cash and holdings.
//
// Each venue is its own serialization domain: mutations take the venue's
// exclusive lock, reads take a shared lock and never see a half-applied trade.

#include "pm/ideas.hpp"
#include "pm/ledger.hpp"
#include "pm/venue.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

namespace pm {

nlohmann::json to_json(const TradeEvent& event);
TradeEvent trade_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ContractPrice& price);

std::int64_t system_clock_ms();

class Exchange {
public:
    using Clock = std::function<std::int64_t()>;

    explicit Exchange(Clock clock = &system_clock_ms);
    Exchange(const Exchange&) = delete;
    Exchange& operator=(const Exchange&) = delete;
    Exchange(Exchange&&) noexcept;
    Exchange& operator=(Exchange&&) noexcept;
    ~Exchange();

    /// Not owned. Every subsequent event is appended and flushed.
    void attach_log(std::ostream* out);

    void open_venue(const std::string& venue_id, Design design, std::vector<IdeaContract> ideas, double b,
                    Money payout_per_share = kDefaultPayout);
    void create_account(const std::string& venue_id, const std::string& trader_id,
                        Money endowment = kDefaultEndowment);
    Quote quote(const std::string& venue_id, const ContractRef& contract, Direction direction,
                std::int64_t quantity) const;
    Fill execute(const std::string& venue_id, const Order& order);
    Settlement settle(const std::string& venue_id, const GroundTruth& truth, std::size_t k = kDefaultTopK);

    bool has_venue(const std::string& venue_id) const;
    std::vector<std::string> venue_ids() const;

    /// Runs fn(const Venue&, const Ledger&) under the venue's shared lock.
    template <class Fn>
    decltype(auto) read(const std::string& venue_id, Fn&& fn) const {
        const Book& b = book(venue_id);
        std::shared_lock lock(b.mutex);
        return std::forward<Fn>(fn)(b.venue, b.ledger);
    }

    /// Trades with seq > after_seq, in seq order.
    std::vector<TradeEvent> trades_since(const std::string& venue_id, std::int64_t after_seq) const;
    /// Blocks until the venue has a trade beyond after_seq, is settled, or the timeout passes.
    /// Returns true unless it timed out.
    bool wait_for_update(const std::string& venue_id, std::int64_t after_seq,
                         std::chrono::milliseconds timeout) const;

    /// `{venues, accounts, seq}`; doubles are printed round-trip exact.
    nlohmann::json snapshot() const;

    /// Rebuilds an exchange from a JSON-lines event log. Aborts with a
    /// ReplayError naming the offending seq on a gap or an inconsistent record.
    /// Records whose seq was already applied are skipped if identical.
    static Exchange replay(std::istream& log, Clock clock = &system_clock_ms);

private:
    struct Book {
        Book(Venue v, Ledger l) : venue(std::move(v)), ledger(std::move(l)) {}
        Venue venue;
        Ledger ledger;
        mutable std::shared_mutex mutex;
        mutable std::condition_variable_any changed;
    };

    const Book& book(const std::string& venue_id) const;
    Book& book(const std::string& venue_id);
    void write(const nlohmann::json& record);
    Fill execute_at(Book& b, const Order& order, std::int64_t ts);

    Clock clock_;
    std::ostream* log_ = nullptr;
    std::mutex log_mutex_;
    mutable std::shared_mutex books_mutex_;
    std::map<std::string, std::unique_ptr<Book>> books_;
};

}  // namespace pm
