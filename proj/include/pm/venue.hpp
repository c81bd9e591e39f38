#pragma once

// Market topologies. A Single venue prices all ideas in one n-outcome LMSR;
// a Multi venue gives every idea its own binary Top/Flop LMSR with a shared b.

#include "pm/ideas.hpp"
#include "pm/ledger.hpp"
#include "pm/lmsr.hpp"
#include "pm/money.hpp"
#include "pm/types.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pm {

struct ElasticityPreset {
    std::string_view name;
    double b;
    int assumed_traders;
};

inline constexpr std::array<ElasticityPreset, 3> kElasticityPresets{{
    {"high", 219.0, 40},
    {"moderate", 548.0, 60},
    {"low", 877.0, 80},
}};

std::optional<ElasticityPreset> find_preset(std::string_view name);

inline constexpr Money kDefaultPayout = Money::whole(100);
inline constexpr std::size_t kDefaultTopK = 5;

struct Quote {
    double cash_delta = 0.0;  // currency the trader pays; negative on a sale
    Money charge;             // cash_delta rounded to ledger precision
    std::vector<ContractPrice> prices_after;
};

struct Fill {
    TradeEvent event;
    Money new_cash;
};

struct Settlement {
    std::size_t k = 0;
    std::set<std::string> top_k;
    std::map<std::string, Money> payouts;  // every account, including zero payouts
};

class Venue {
public:
    /// Rejects fewer than two ideas, duplicate ids, b <= 0 and non-positive payouts.
    /// Currency per trade is payout_per_share times the LMSR cost difference, so a
    /// price p reads as "p x payout" per share, the same scale settlement pays out.
    Venue(std::string venue_id, Design design, std::vector<IdeaContract> ideas, double b,
          Money payout_per_share = kDefaultPayout);

    const std::string& id() const noexcept { return id_; }
    Design design() const noexcept { return design_; }
    double liquidity() const noexcept { return b_; }
    Money payout_per_share() const noexcept { return payout_; }
    bool settled() const noexcept { return settlement_.has_value(); }
    const std::optional<Settlement>& settlement() const noexcept { return settlement_; }
    const std::vector<IdeaContract>& ideas() const noexcept { return ideas_; }
    const IdeaContract& idea(const std::string& idea_id) const;

    std::size_t market_count() const noexcept { return markets_.size(); }
    const lmsr::LmsrState& market(std::size_t i) const { return markets_.at(i); }
    /// Rounded currency the market maker has taken in (sales subtract).
    Money maker_collected(std::size_t market) const { return collected_.at(market); }

    /// Every tradable contract, in idea order (Top before Flop).
    std::vector<ContractRef> contracts() const;
    bool valid(const ContractRef& contract) const noexcept;
    double price(const ContractRef& contract) const;
    std::vector<ContractPrice> price_snapshot() const;

    Quote quote(const ContractRef& contract, Direction direction, std::int64_t quantity) const;

    /// Validates against the trader's account, then atomically moves the
    /// inventory, cash and holdings and appends a TradeEvent with the next seq.
    /// No state changes if anything throws.
    Fill execute(Ledger& ledger, const Order& order, std::int64_t ts);

    /// Placement 1 = highest price (Top price in Multi); ties by ascending idea_id.
    Ranking final_ranking() const;

    /// Pays payout_per_share for every share whose claim matches top-k membership
    /// and marks the venue settled. The truth must cover exactly the venue's ideas.
    Settlement settle(Ledger& ledger, const GroundTruth& truth, std::size_t k = kDefaultTopK);

    /// Cash plus holdings marked at price x payout_per_share.
    double portfolio_value(const Account& account) const;

private:
    struct Slot {
        std::size_t market;
        std::size_t outcome;
    };
    Slot locate(const ContractRef& contract) const;
    std::vector<ContractPrice> changed_prices(std::size_t market, const lmsr::LmsrState& state) const;
    void require_open() const;

    std::string id_;
    Design design_;
    std::vector<IdeaContract> ideas_;
    std::unordered_map<std::string, std::size_t> index_;
    double b_;
    Money payout_;
    std::vector<lmsr::LmsrState> markets_;
    std::vector<Money> collected_;
    std::optional<Settlement> settlement_;
};

}  // namespace pm
