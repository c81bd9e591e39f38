#include "pm/errors.hpp"
#include "pm/venue.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace {

std::vector<pm::IdeaContract> ideas(std::size_t n) {
    std::vector<pm::IdeaContract> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "i%02zu", i + 1);
        out.push_back({id, id, "", 5.0 - 0.1 * static_cast<double>(i), pm::Stratum::Medium});
    }
    return out;
}

pm::ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const pm::MarketError& e) {
        return e.code();
    }
    FAIL("no error raised");
    return pm::ErrorCode::Config;
}

// 548 (ln(e^{1/548} + 1) - ln 2) and the 10-share counterpart, times the 100 payout.
constexpr double kBuy1TopB548 = 50.022810215813224;
constexpr double kBuy10TopB548 = 502.28099024972388;
constexpr double kTopAfter10B548 = 0.50456191720468019;

}  // namespace

TEST_CASE("open_venue examples") {
    const pm::Venue single("s", pm::Design::Single, ideas(24), 548.0);
    REQUIRE(single.market_count() == 1);
    CHECK(single.market(0).outcomes() == 24);
    for (const auto& p : single.price_snapshot()) CHECK(p.price == doctest::Approx(1.0 / 24.0).epsilon(1e-15));

    const pm::Venue multi("m", pm::Design::Multi, ideas(24), 548.0);
    REQUIRE(multi.market_count() == 24);
    for (const auto& p : multi.price_snapshot()) CHECK(p.price == 0.5);
    CHECK(multi.contracts().size() == 48);

    CHECK(code_of([] { pm::Venue("s", pm::Design::Single, ideas(1), 548.0); }) == pm::ErrorCode::InvalidArgument);
    auto dup = ideas(3);
    dup[2].idea_id = dup[0].idea_id;
    CHECK(code_of([&] { pm::Venue("s", pm::Design::Multi, dup, 548.0); }) == pm::ErrorCode::DuplicateId);
    CHECK(code_of([] { pm::Venue("s", pm::Design::Multi, ideas(3), 0.0); }) == pm::ErrorCode::InvalidArgument);
    CHECK(pm::find_preset("moderate")->b == 548.0);
    CHECK(pm::find_preset("high")->assumed_traders == 40);
    CHECK(!pm::find_preset("extreme"));
}

TEST_CASE("quote examples") {
    const pm::Venue multi("m", pm::Design::Multi, ideas(24), 548.0);
    const auto q = multi.quote({"i01", pm::Side::Top}, pm::Direction::Buy, 1);
    CHECK(std::fabs(q.cash_delta - kBuy1TopB548) < 1e-10);
    CHECK(q.cash_delta > 50.0);
    CHECK(q.charge.str() == "50.0228");
    CHECK(q.prices_after.size() == 2);
    CHECK(multi.price({"i01", pm::Side::Top}) == 0.5);  // quoting never mutates

    const pm::Venue single("s", pm::Design::Single, ideas(24), 548.0);
    CHECK(code_of([&] { (void)single.quote({"i01", pm::Side::Idea}, pm::Direction::Buy, 0); }) ==
          pm::ErrorCode::DegenerateOrder);
    CHECK(code_of([&] { (void)single.quote({"i01", pm::Side::Top}, pm::Direction::Buy, 1); }) ==
          pm::ErrorCode::UnknownContract);
    CHECK(code_of([&] { (void)multi.quote({"i01", pm::Side::Idea}, pm::Direction::Buy, 1); }) ==
          pm::ErrorCode::UnknownContract);
    CHECK(code_of([&] { (void)multi.quote({"zz", pm::Side::Top}, pm::Direction::Buy, 1); }) ==
          pm::ErrorCode::UnknownContract);

    // Without a commit in between, buy and sell quotes are not negatives.
    const auto buy = single.quote({"i03", pm::Side::Idea}, pm::Direction::Buy, 40);
    const auto sell = single.quote({"i03", pm::Side::Idea}, pm::Direction::Sell, 40);
    CHECK(buy.cash_delta + sell.cash_delta > 1e-6);
}

TEST_CASE("execute on a fresh Multi venue") {
    pm::Venue venue("m", pm::Design::Multi, ideas(24), 548.0);
    pm::Ledger ledger("m");
    ledger.create_account("t1");
    const auto before = venue.price_snapshot();

    const auto fill = venue.execute(ledger, {"t1", {"i05", pm::Side::Top}, pm::Direction::Buy, 10}, 7);
    CHECK(fill.event.seq == 1);
    CHECK(fill.event.ts == 7);
    CHECK(std::fabs(fill.event.cash_delta.to_double() - kBuy10TopB548) <= 0.00005);
    CHECK(fill.new_cash == pm::Money::whole(5000) - fill.event.cash_delta);
    CHECK(ledger.account("t1").holding({"i05", pm::Side::Top}) == 10);
    CHECK(ledger.account("t1").transaction_count == 1);
    CHECK(std::fabs(venue.price({"i05", pm::Side::Top}) - kTopAfter10B548) < 1e-15);
    CHECK(venue.price({"i05", pm::Side::Top}) + venue.price({"i05", pm::Side::Flop}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fill.event.prices_after.size() == 2);

    const auto after = venue.price_snapshot();
    int changed = 0;
    for (std::size_t i = 0; i < after.size(); ++i) {
        if (after[i].idea_id == "i05") {
            ++changed;
            CHECK(after[i].price != before[i].price);
        } else {
            CHECK(after[i].price == before[i].price);  // bit-identical
        }
    }
    CHECK(changed == 2);
    CHECK(venue.maker_collected(4) == fill.event.cash_delta);
}

TEST_CASE("execute on a fresh Single venue couples every price") {
    pm::Venue venue("s", pm::Design::Single, ideas(24), 548.0);
    pm::Ledger ledger("s");
    ledger.create_account("t1");
    const auto before = venue.price_snapshot();
    const auto fill = venue.execute(ledger, {"t1", {"i05", pm::Side::Idea}, pm::Direction::Buy, 10}, 0);
    CHECK(fill.event.prices_after.size() == 24);
    const auto after = venue.price_snapshot();
    for (std::size_t i = 0; i < after.size(); ++i) {
        if (after[i].idea_id == "i05") {
            CHECK(after[i].price > before[i].price);
        } else {
            CHECK(after[i].price < before[i].price);
        }
    }
}

TEST_CASE("execute rejections leave no trace") {
    pm::Venue venue("m", pm::Design::Multi, ideas(4), 100.0);
    pm::Ledger ledger("m");
    ledger.create_account("rich");
    ledger.create_account("poor", pm::Money::whole(10));
    ledger.create_account("broke", pm::Money{});
    const auto snapshot = venue.price_snapshot();

    CHECK(code_of([&] { venue.execute(ledger, {"rich", {"i01", pm::Side::Top}, pm::Direction::Sell, 1}, 0); }) ==
          pm::ErrorCode::InsufficientHoldings);
    try {
        venue.execute(ledger, {"poor", {"i01", pm::Side::Top}, pm::Direction::Buy, 1}, 0);
        FAIL("overspend accepted");
    } catch (const pm::MarketError& e) {
        CHECK(e.code() == pm::ErrorCode::InsufficientCash);
        REQUIRE(e.shortfall());
        CHECK(e.shortfall()->available == 10.0);
        CHECK(e.shortfall()->required > 50.0);
    }
    CHECK(code_of([&] { venue.execute(ledger, {"broke", {"i02", pm::Side::Flop}, pm::Direction::Buy, 1}, 0); }) ==
          pm::ErrorCode::InsufficientCash);
    CHECK(code_of([&] { venue.execute(ledger, {"ghost", {"i01", pm::Side::Top}, pm::Direction::Buy, 1}, 0); }) ==
          pm::ErrorCode::UnknownTrader);
    CHECK(code_of([&] { venue.execute(ledger, {"rich", {"i01", pm::Side::Top}, pm::Direction::Buy, 0}, 0); }) ==
          pm::ErrorCode::DegenerateOrder);
    CHECK(venue.price_snapshot() == snapshot);
    CHECK(ledger.trades().empty());
    CHECK(ledger.total_cash() == ledger.total_endowment());

    // Selling part of a position is fine; selling more than held is not.
    venue.execute(ledger, {"rich", {"i01", pm::Side::Top}, pm::Direction::Buy, 3}, 0);
    CHECK(code_of([&] { venue.execute(ledger, {"rich", {"i01", pm::Side::Top}, pm::Direction::Sell, 4}, 0); }) ==
          pm::ErrorCode::InsufficientHoldings);
    CHECK(code_of([&] { venue.execute(ledger, {"rich", {"i01", pm::Side::Flop}, pm::Direction::Sell, 1}, 0); }) ==
          pm::ErrorCode::InsufficientHoldings);
    const auto sale = venue.execute(ledger, {"rich", {"i01", pm::Side::Top}, pm::Direction::Sell, 3}, 0);
    CHECK(sale.event.cash_delta < pm::Money{});
    CHECK(ledger.account("rich").holdings.empty());
}

TEST_CASE("final_ranking") {
    SUBCASE("fresh venue falls back to id order") {
        const pm::Venue venue("s", pm::Design::Single, ideas(5), 100.0);
        CHECK(venue.final_ranking().best_first() == std::vector<std::string>{"i01", "i02", "i03", "i04", "i05"});
    }
    SUBCASE("Single prices (0.2, 0.5, 0.3)") {
        pm::Venue venue("s", pm::Design::Single, ideas(3), 100.0);
        pm::Ledger ledger("s");
        ledger.create_account("t", pm::Money::whole(1000000));
        // q = b ln p puts the prices exactly where we want them, up to rounding to whole shares.
        venue.execute(ledger, {"t", {"i02", pm::Side::Idea}, pm::Direction::Buy, 92}, 0);   // 100 ln 2.5
        venue.execute(ledger, {"t", {"i03", pm::Side::Idea}, pm::Direction::Buy, 41}, 0);   // 100 ln 1.5
        const auto p = pm::lmsr::prices(venue.market(0));
        CHECK(p[0] == doctest::Approx(0.2).epsilon(0.01));
        CHECK(p[1] == doctest::Approx(0.5).epsilon(0.01));
        CHECK(p[2] == doctest::Approx(0.3).epsilon(0.01));
        const auto ranking = venue.final_ranking();
        CHECK(ranking.at("i01") == 3);
        CHECK(ranking.at("i02") == 1);
        CHECK(ranking.at("i03") == 2);
    }
    SUBCASE("Multi unique maximum") {
        pm::Venue venue("m", pm::Design::Multi, ideas(6), 100.0);
        pm::Ledger ledger("m");
        ledger.create_account("t", pm::Money::whole(1000000));
        venue.execute(ledger, {"t", {"i04", pm::Side::Top}, pm::Direction::Buy, 220}, 0);  // Top ~0.9
        CHECK(venue.price({"i04", pm::Side::Top}) == doctest::Approx(0.9).epsilon(0.01));
        CHECK(venue.final_ranking().at("i04") == 1);
        CHECK(venue.final_ranking().at("i01") == 2);
    }
}

TEST_CASE("settle examples") {
    SUBCASE("three idea shares of the second-best idea, Single") {
        auto list = ideas(24);
        pm::Venue venue("s", pm::Design::Single, list, 548.0);
        pm::Ledger ledger("s");
        ledger.create_account("t1");
        venue.execute(ledger, {"t1", {"i02", pm::Side::Idea}, pm::Direction::Buy, 3}, 0);
        const auto result = venue.settle(ledger, pm::GroundTruth::from_ideas(list));
        CHECK(result.payouts.at("t1") == pm::Money::whole(300));
        CHECK(ledger.account("t1").holdings.empty());
        CHECK(venue.settled());
        CHECK(code_of([&] { venue.settle(ledger, pm::GroundTruth::from_ideas(list)); }) == pm::ErrorCode::VenueSettled);
        CHECK(code_of([&] { (void)venue.quote({"i01", pm::Side::Idea}, pm::Direction::Buy, 1); }) ==
              pm::ErrorCode::VenueSettled);
        CHECK(code_of([&] { venue.execute(ledger, {"t1", {"i01", pm::Side::Idea}, pm::Direction::Buy, 1}, 0); }) ==
              pm::ErrorCode::VenueSettled);
    }
    SUBCASE("two Flop shares of the 20th idea, Multi") {
        auto list = ideas(24);
        pm::Venue venue("m", pm::Design::Multi, list, 548.0);
        pm::Ledger ledger("m");
        ledger.create_account("t1");
        ledger.create_account("idle");
        venue.execute(ledger, {"t1", {"i20", pm::Side::Flop}, pm::Direction::Buy, 2}, 0);
        const auto cash_before = ledger.account("t1").cash;
        const auto result = venue.settle(ledger, pm::GroundTruth::from_ideas(list));
        CHECK(result.payouts.at("t1") == pm::Money::whole(200));
        CHECK(result.payouts.at("idle") == pm::Money{});
        CHECK(ledger.account("t1").cash == cash_before + pm::Money::whole(200));
    }
    SUBCASE("truth must cover exactly the venue's ideas") {
        auto list = ideas(4);
        pm::Venue venue("m", pm::Design::Multi, list, 548.0);
        pm::Ledger ledger("m");
        CHECK(code_of([&] { venue.settle(ledger, pm::GroundTruth({{"i01", 1}, {"i02", 2}, {"i03", 3}})); }) ==
              pm::ErrorCode::TruthMismatch);
        CHECK(code_of([&] {
                  venue.settle(ledger, pm::GroundTruth({{"i01", 1}, {"i02", 2}, {"i03", 3}, {"x", 4}}));
              }) == pm::ErrorCode::TruthMismatch);
        CHECK(code_of([&] { venue.settle(ledger, pm::GroundTruth::from_ideas(list), 5); }) ==
              pm::ErrorCode::InvalidArgument);
        CHECK(!venue.settled());
    }
}

TEST_CASE("settlement matches brute force on a 4-idea toy venue, k = 2") {
    std::mt19937_64 rng(11);
    for (pm::Design design : {pm::Design::Single, pm::Design::Multi}) {
        for (int round = 0; round < 50; ++round) {
            auto list = ideas(4);
            std::map<std::string, double> quality;
            std::vector<std::string> ids;
            for (auto& idea : list) {
                idea.quality_mean = static_cast<double>(std::uniform_int_distribution<int>(1, 3)(rng));  // forces ties
                quality[idea.idea_id] = idea.quality_mean;
                ids.push_back(idea.idea_id);
            }
            pm::Venue venue("v", design, list, 50.0);
            pm::Ledger ledger("v");
            for (int t = 0; t < 3; ++t) ledger.create_account("t" + std::to_string(t), pm::Money::whole(100000));
            const auto contracts = venue.contracts();
            for (int i = 0; i < 12; ++i) {
                const auto& c = contracts[std::uniform_int_distribution<std::size_t>(0, contracts.size() - 1)(rng)];
                const std::string trader = "t" + std::to_string(std::uniform_int_distribution<int>(0, 2)(rng));
                venue.execute(ledger, {trader, c, pm::Direction::Buy, std::uniform_int_distribution<int>(1, 9)(rng)}, 0);
            }
            const auto expected = oracle::brute_force_payouts(ledger.accounts(), ids, quality, 2, 100);
            const auto result = venue.settle(ledger, pm::GroundTruth(quality), 2);
            for (const auto& [trader, amount] : expected) CHECK(result.payouts.at(trader) == pm::Money::whole(amount));
        }
    }
}

TEST_CASE("cash conservation and non-negative holdings under random trading") {
    std::mt19937_64 rng(5);
    for (pm::Design design : {pm::Design::Single, pm::Design::Multi}) {
        auto list = ideas(8);
        pm::Venue venue("v", design, list, 219.0);
        pm::Ledger ledger("v");
        for (int t = 0; t < 5; ++t) ledger.create_account("t" + std::to_string(t), pm::Money::whole(100000));
        const auto contracts = venue.contracts();
        for (int i = 0; i < 2000; ++i) {
            const auto& c = contracts[std::uniform_int_distribution<std::size_t>(0, contracts.size() - 1)(rng)];
            const std::string trader = "t" + std::to_string(std::uniform_int_distribution<int>(0, 4)(rng));
            const auto dir = std::bernoulli_distribution(0.4)(rng) ? pm::Direction::Sell : pm::Direction::Buy;
            try {
                venue.execute(ledger, {trader, c, dir, std::uniform_int_distribution<int>(1, 30)(rng)}, i);
            } catch (const pm::MarketError&) {
            }
            pm::Money collected{};
            for (std::size_t m = 0; m < venue.market_count(); ++m) collected += venue.maker_collected(m);
            REQUIRE(ledger.total_cash() + collected == ledger.total_endowment());
        }
        for (const auto& [id, account] : ledger.accounts()) {
            CHECK(account.cash >= pm::Money{});
            for (const auto& [c, shares] : account.holdings) CHECK(shares > 0);
        }
        CHECK(ledger.trades().size() > 500);
    }
}

TEST_CASE("Multi maker loss per binary market stays within 100 b ln 2") {
    auto list = ideas(6);
    const auto truth = pm::GroundTruth::from_ideas(list);
    const auto top = truth.top_k(pm::kDefaultTopK);
    pm::Venue venue("m", pm::Design::Multi, list, 219.0);
    pm::Ledger ledger("m");
    ledger.create_account("insider", pm::Money::whole(10000000));
    // Buys the winning side of every binary market far past certainty.
    for (const auto& idea : list) {
        const pm::Side winner = top.contains(idea.idea_id) ? pm::Side::Top : pm::Side::Flop;
        for (int i = 0; i < 20; ++i) venue.execute(ledger, {"insider", {idea.idea_id, winner}, pm::Direction::Buy, 500}, 0);
    }
    const auto result = venue.settle(ledger, truth);
    const double bound = 100.0 * 219.0 * std::log(2.0);
    const double paid = result.payouts.at("insider").to_double();
    double collected = 0.0;
    for (std::size_t m = 0; m < venue.market_count(); ++m) {
        const double loss = 10000.0 * 100.0 - venue.maker_collected(m).to_double();
        CHECK(loss <= bound + 1e-4);
        CHECK(loss > bound - 1.0);  // the insider got close to the bound
        collected += venue.maker_collected(m).to_double();
    }
    CHECK(paid == 6 * 10000.0 * 100.0);
    CHECK(paid - collected <= 6 * bound + 1e-4);
}

TEST_CASE("portfolio_value") {
    pm::Venue venue("m", pm::Design::Multi, ideas(3), 548.0);
    pm::Ledger ledger("m");
    const auto& fresh = ledger.create_account("t1");
    CHECK(venue.portfolio_value(fresh) == 5000.0);

    // Ten shares priced 0.5 are worth cash + 10 x 0.5 x 100.
    pm::Account manual;
    manual.cash = pm::Money::whole(4000);
    manual.holdings[{"i01", pm::Side::Top}] = 10;
    CHECK(venue.portfolio_value(manual) == 4500.0);

    venue.execute(ledger, {"t1", {"i02", pm::Side::Flop}, pm::Direction::Buy, 10}, 0);
    const auto& acct = ledger.account("t1");
    const double expected = acct.cash.to_double() + 10.0 * venue.price({"i02", pm::Side::Flop}) * 100.0;
    CHECK(venue.portfolio_value(acct) == doctest::Approx(expected).epsilon(1e-15));
    REQUIRE(acct.value_series.size() == 2);
    CHECK(acct.value_series[0] == pm::ValuePoint{0, 5000.0});
    CHECK(acct.value_series[1].seq == 1);
    CHECK(acct.value_series[1].value == doctest::Approx(expected).epsilon(1e-15));
}
