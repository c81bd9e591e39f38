#include "pm/exchange.hpp"

#include "pm/errors.hpp"

#include <cmath>
#include <sstream>

namespace pm {

using nlohmann::json;

std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json to_json(const ContractPrice& price) {
    return json{{"idea_id", price.idea_id}, {"side", to_string(price.side)}, {"price", price.price}};
}

json to_json(const TradeEvent& e) {
    json prices = json::array();
    for (const auto& p : e.prices_after) prices.push_back(to_json(p));
    return json{{"seq", e.seq},
                {"ts", e.ts},
                {"venue_id", e.venue_id},
                {"trader_id", e.trader_id},
                {"idea_id", e.idea_id},
                {"side", to_string(e.side)},
                {"direction", to_string(e.direction)},
                {"qty", e.qty},
                {"cash_delta", e.cash_delta.to_double()},
                {"prices_after", std::move(prices)}};
}

TradeEvent trade_from_json(const json& j) {
    TradeEvent e;
    e.seq = j.at("seq").get<std::int64_t>();
    e.ts = j.at("ts").get<std::int64_t>();
    e.venue_id = j.at("venue_id").get<std::string>();
    e.trader_id = j.at("trader_id").get<std::string>();
    e.idea_id = j.at("idea_id").get<std::string>();
    e.side = parse_side(j.at("side").get<std::string>());
    e.direction = parse_direction(j.at("direction").get<std::string>());
    e.qty = j.at("qty").get<std::int64_t>();
    e.cash_delta = Money::from_double(j.at("cash_delta").get<double>());
    for (const auto& p : j.at("prices_after")) {
        e.prices_after.push_back({p.at("idea_id").get<std::string>(), parse_side(p.at("side").get<std::string>()),
                                  p.at("price").get<double>()});
    }
    return e;
}

namespace {

json ideas_to_json(const std::vector<IdeaContract>& ideas) {
    json out = json::array();
    for (const auto& idea : ideas) {
        out.push_back({{"idea_id", idea.idea_id},
                       {"title", idea.title},
                       {"description", idea.description},
                       {"quality_mean", idea.quality_mean},
                       {"stratum", to_string(idea.stratum)}});
    }
    return out;
}

std::vector<IdeaContract> ideas_from_json(const json& j) {
    std::vector<IdeaContract> ideas;
    for (const auto& item : j) {
        IdeaContract idea;
        idea.idea_id = item.at("idea_id").get<std::string>();
        idea.title = item.value("title", "");
        idea.description = item.value("description", "");
        idea.quality_mean = item.value("quality_mean", 0.0);
        idea.stratum = parse_stratum(item.value("stratum", "medium"));
        ideas.push_back(std::move(idea));
    }
    return ideas;
}

}  // namespace

Exchange::Exchange(Clock clock) : clock_(std::move(clock)) {}

Exchange::Exchange(Exchange&& other) noexcept
    : clock_(std::move(other.clock_)), log_(other.log_), books_(std::move(other.books_)) {}

Exchange& Exchange::operator=(Exchange&& other) noexcept {
    clock_ = std::move(other.clock_);
    log_ = other.log_;
    books_ = std::move(other.books_);
    return *this;
}

Exchange::~Exchange() = default;

void Exchange::attach_log(std::ostream* out) {
    std::lock_guard lock(log_mutex_);
    log_ = out;
}

void Exchange::write(const json& record) {
    std::lock_guard lock(log_mutex_);
    if (log_ == nullptr) return;
    *log_ << record.dump() << '\n';
    log_->flush();
}

const Exchange::Book& Exchange::book(const std::string& venue_id) const {
    std::shared_lock lock(books_mutex_);
    auto it = books_.find(venue_id);
    if (it == books_.end()) throw MarketError(ErrorCode::UnknownVenue, "unknown venue '" + venue_id + "'");
    return *it->second;
}

Exchange::Book& Exchange::book(const std::string& venue_id) {
    return const_cast<Book&>(std::as_const(*this).book(venue_id));
}

void Exchange::open_venue(const std::string& venue_id, Design design, std::vector<IdeaContract> ideas, double b,
                          Money payout_per_share) {
    json record{{"event", "open_venue"},
                {"venue_id", venue_id},
                {"design", to_string(design)},
                {"b", b},
                {"payout", payout_per_share.to_double()},
                {"ideas", ideas_to_json(ideas)}};
    auto created = std::make_unique<Book>(Venue(venue_id, design, std::move(ideas), b, payout_per_share),
                                          Ledger(venue_id));
    std::unique_lock lock(books_mutex_);
    if (books_.contains(venue_id)) throw MarketError(ErrorCode::DuplicateId, "venue '" + venue_id + "' exists");
    books_.emplace(venue_id, std::move(created));
    write(record);
}

void Exchange::create_account(const std::string& venue_id, const std::string& trader_id, Money endowment) {
    Book& b = book(venue_id);
    std::unique_lock lock(b.mutex);
    b.ledger.create_account(trader_id, endowment);
    write({{"event", "account"}, {"venue_id", venue_id}, {"trader_id", trader_id}, {"endowment", endowment.to_double()}});
}

Quote Exchange::quote(const std::string& venue_id, const ContractRef& contract, Direction direction,
                      std::int64_t quantity) const {
    const Book& b = book(venue_id);
    std::shared_lock lock(b.mutex);
    return b.venue.quote(contract, direction, quantity);
}

Fill Exchange::execute_at(Book& b, const Order& order, std::int64_t ts) {
    Fill fill = b.venue.execute(b.ledger, order, ts);
    write(to_json(fill.event));
    return fill;
}

Fill Exchange::execute(const std::string& venue_id, const Order& order) {
    Book& b = book(venue_id);
    Fill fill = [&] {
        std::unique_lock lock(b.mutex);
        return execute_at(b, order, clock_());
    }();
    b.changed.notify_all();
    return fill;
}

Settlement Exchange::settle(const std::string& venue_id, const GroundTruth& truth, std::size_t k) {
    Book& b = book(venue_id);
    Settlement result = [&] {
        std::unique_lock lock(b.mutex);
        Settlement s = b.venue.settle(b.ledger, truth, k);
        write({{"event", "settle"}, {"venue_id", venue_id}, {"ts", clock_()}, {"k", k}, {"truth", truth.quality()}});
        return s;
    }();
    b.changed.notify_all();
    return result;
}

bool Exchange::has_venue(const std::string& venue_id) const {
    std::shared_lock lock(books_mutex_);
    return books_.contains(venue_id);
}

std::vector<std::string> Exchange::venue_ids() const {
    std::shared_lock lock(books_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, b] : books_) ids.push_back(id);
    return ids;
}

std::vector<TradeEvent> Exchange::trades_since(const std::string& venue_id, std::int64_t after_seq) const {
    const Book& b = book(venue_id);
    std::shared_lock lock(b.mutex);
    const auto trades = b.ledger.trades();
    const auto start = static_cast<std::size_t>(std::max<std::int64_t>(after_seq, 0));
    if (start >= trades.size()) return {};
    return {trades.begin() + static_cast<std::ptrdiff_t>(start), trades.end()};
}

bool Exchange::wait_for_update(const std::string& venue_id, std::int64_t after_seq,
                               std::chrono::milliseconds timeout) const {
    const Book& b = book(venue_id);
    std::shared_lock lock(b.mutex);
    return b.changed.wait_for(lock, timeout,
                              [&] { return b.ledger.last_seq() > after_seq || b.venue.settled(); });
}

json Exchange::snapshot() const {
    json venues = json::array();
    json accounts = json::array();
    json seqs = json::object();
    std::shared_lock books_lock(books_mutex_);
    for (const auto& [id, bp] : books_) {
        const Book& b = *bp;
        std::shared_lock lock(b.mutex);
        const Venue& v = b.venue;
        json markets = json::array();
        for (std::size_t m = 0; m < v.market_count(); ++m) {
            const auto& state = v.market(m);
            markets.push_back({{"q", std::vector<double>(state.inventory().begin(), state.inventory().end())},
                               {"prices", lmsr::prices(state)},
                               {"maker_collected", v.maker_collected(m).str()}});
        }
        json venue{{"venue_id", id},
                   {"design", to_string(v.design())},
                   {"b", v.liquidity()},
                   {"payout", v.payout_per_share().str()},
                   {"status", v.settled() ? "settled" : "open"},
                   {"markets", std::move(markets)}};
        if (v.settled()) {
            json payouts = json::object();
            for (const auto& [t, amount] : v.settlement()->payouts) payouts[t] = amount.str();
            venue["settlement"] = {{"k", v.settlement()->k}, {"top_k", v.settlement()->top_k}, {"payouts", payouts}};
        }
        venues.push_back(std::move(venue));
        for (const auto& [trader_id, a] : b.ledger.accounts()) {
            json holdings = json::array();
            for (const auto& [contract, qty] : a.holdings) {
                holdings.push_back({{"idea_id", contract.idea_id}, {"side", to_string(contract.side)}, {"qty", qty}});
            }
            accounts.push_back({{"venue_id", id},
                                {"trader_id", trader_id},
                                {"endowment", a.endowment.str()},
                                {"cash", a.cash.str()},
                                {"holdings", std::move(holdings)},
                                {"transaction_count", a.transaction_count}});
        }
        seqs[id] = b.ledger.last_seq();
    }
    return json{{"venues", std::move(venues)}, {"accounts", std::move(accounts)}, {"seq", std::move(seqs)}};
}

namespace {

bool same_prices(const std::vector<ContractPrice>& a, const std::vector<ContractPrice>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        // Prices are derived data; tolerate last-bit kernel differences between machines.
        if (a[i].idea_id != b[i].idea_id || a[i].side != b[i].side || std::fabs(a[i].price - b[i].price) > 1e-12) {
            return false;
        }
    }
    return true;
}

bool same_trade(const TradeEvent& a, const TradeEvent& b) {
    return a.seq == b.seq && a.ts == b.ts && a.venue_id == b.venue_id && a.trader_id == b.trader_id &&
           a.idea_id == b.idea_id && a.side == b.side && a.direction == b.direction && a.qty == b.qty &&
           a.cash_delta == b.cash_delta && same_prices(a.prices_after, b.prices_after);
}

}  // namespace

Exchange Exchange::replay(std::istream& log, Clock clock) {
    Exchange ex(std::move(clock));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(log, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        json record;
        std::int64_t seq = 0;
        try {
            record = json::parse(line);
            if (record.contains("seq")) seq = record.at("seq").get<std::int64_t>();
        } catch (const json::exception& e) {
            throw ReplayError(ErrorCode::ReplayCorrupt, 0, line_no, "line " + std::to_string(line_no) + ": " + e.what());
        }

        auto corrupt = [&](const std::string& why) {
            return ReplayError(ErrorCode::ReplayCorrupt, seq, line_no,
                               "corrupt record at seq " + std::to_string(seq) + " (line " + std::to_string(line_no) +
                                   "): " + why);
        };

        try {
            if (!record.contains("event")) {
                const TradeEvent logged = trade_from_json(record);
                Book& b = ex.book(logged.venue_id);
                const std::int64_t expected = b.ledger.next_seq();
                if (logged.seq < expected) {
                    if (logged.seq < 1 || !same_trade(b.ledger.trades()[static_cast<std::size_t>(logged.seq - 1)], logged)) {
                        throw corrupt("conflicts with an already applied trade");
                    }
                    continue;
                }
                if (logged.seq > expected) {
                    throw ReplayError(ErrorCode::ReplayGap, logged.seq, line_no,
                                      "gap in trade log: got seq " + std::to_string(logged.seq) + ", expected " +
                                          std::to_string(expected));
                }
                const Order order{logged.trader_id, {logged.idea_id, logged.side}, logged.direction, logged.qty};
                const Fill fill = b.venue.execute(b.ledger, order, logged.ts);
                if (!same_trade(fill.event, logged)) throw corrupt("recomputed trade differs from the logged one");
                continue;
            }
            const auto kind = record.at("event").get<std::string>();
            if (kind == "open_venue") {
                ex.open_venue(record.at("venue_id").get<std::string>(),
                              parse_design(record.at("design").get<std::string>()),
                              ideas_from_json(record.at("ideas")), record.at("b").get<double>(),
                              Money::from_double(record.value("payout", kDefaultPayout.to_double())));
            } else if (kind == "account") {
                ex.create_account(record.at("venue_id").get<std::string>(), record.at("trader_id").get<std::string>(),
                                  Money::from_double(record.at("endowment").get<double>()));
            } else if (kind == "settle") {
                Book& b = ex.book(record.at("venue_id").get<std::string>());
                const GroundTruth truth(record.at("truth").get<std::map<std::string, double>>());
                b.venue.settle(b.ledger, truth, record.at("k").get<std::size_t>());
            } else {
                throw corrupt("unknown event kind '" + kind + "'");
            }
        } catch (const ReplayError&) {
            throw;
        } catch (const std::exception& e) {
            throw corrupt(e.what());
        }
    }
    return ex;
}

}  // namespace pm
