#include "pm/errors.hpp"
#include "pm/ideas.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

namespace {

pm::ErrorCode code_of(const std::string& csv) {
    std::istringstream in(csv);
    try {
        (void)pm::read_ideas_csv(in);
    } catch (const pm::MarketError& e) {
        return e.code();
    }
    FAIL("csv accepted: " << csv);
    return pm::ErrorCode::Config;
}

const char* kHeader = "idea_id,title,description,quality_mean,stratum\n";

}  // namespace

TEST_CASE("csv parsing with quoted fields") {
    std::istringstream in(std::string(kHeader) +
                          "a1,Solar kiosk,\"Charging, lighting and \"\"more\"\"\",4.25,high\n"
                          "a2,Bike racks,\"two\nlines\",1,low\r\n");
    const auto ideas = pm::read_ideas_csv(in);
    REQUIRE(ideas.size() == 2);
    CHECK(ideas[0].idea_id == "a1");
    CHECK(ideas[0].description == "Charging, lighting and \"more\"");
    CHECK(ideas[0].quality_mean == 4.25);
    CHECK(ideas[0].stratum == pm::Stratum::High);
    CHECK(ideas[1].description == "two\nlines");
    CHECK(ideas[1].stratum == pm::Stratum::Low);
}

TEST_CASE("csv rejects bad input") {
    CHECK(code_of("id,title,description,quality_mean,stratum\n") == pm::ErrorCode::InvalidArgument);
    CHECK(code_of(std::string(kHeader) + "a,t,d,5.5,high\n") == pm::ErrorCode::InvalidArgument);
    CHECK(code_of(std::string(kHeader) + "a,t,d,0.9,low\n") == pm::ErrorCode::InvalidArgument);
    CHECK(code_of(std::string(kHeader) + "a,t,d,3,average\n") == pm::ErrorCode::InvalidArgument);
    CHECK(code_of(std::string(kHeader) + "a,t,d,3,medium\na,u,e,2,low\n") == pm::ErrorCode::DuplicateId);
    CHECK(code_of(std::string(kHeader) + "a,t,d,3\n") == pm::ErrorCode::InvalidArgument);
}

TEST_CASE("write then read round trips") {
    const auto ideas = pm::synthetic_ideas();
    std::stringstream buf;
    pm::write_ideas_csv(buf, ideas);
    const auto back = pm::read_ideas_csv(buf);
    REQUIRE(back.size() == ideas.size());
    for (std::size_t i = 0; i < ideas.size(); ++i) {
        CHECK(back[i].idea_id == ideas[i].idea_id);
        CHECK(back[i].title == ideas[i].title);
        CHECK(back[i].description == ideas[i].description);
        CHECK(back[i].quality_mean == ideas[i].quality_mean);
        CHECK(back[i].stratum == ideas[i].stratum);
    }
}

TEST_CASE("synthetic corpus") {
    const auto ideas = pm::synthetic_ideas();
    REQUIRE(ideas.size() == 24);
    int counts[3] = {0, 0, 0};
    double min_high = 5, max_medium = 0, min_medium = 5, max_low = 0;
    for (const auto& idea : ideas) {
        ++counts[static_cast<int>(idea.stratum)];
        if (idea.stratum == pm::Stratum::High) min_high = std::min(min_high, idea.quality_mean);
        if (idea.stratum == pm::Stratum::Medium) {
            max_medium = std::max(max_medium, idea.quality_mean);
            min_medium = std::min(min_medium, idea.quality_mean);
        }
        if (idea.stratum == pm::Stratum::Low) max_low = std::max(max_low, idea.quality_mean);
    }
    CHECK(counts[0] == 8);
    CHECK(counts[1] == 8);
    CHECK(counts[2] == 8);
    CHECK(min_high > max_medium);
    CHECK(min_medium > max_low);

    const auto again = pm::synthetic_ideas();
    for (std::size_t i = 0; i < ideas.size(); ++i) CHECK(again[i].quality_mean == ideas[i].quality_mean);
}

TEST_CASE("ground truth ranking and ties") {
    const pm::GroundTruth truth({{"c", 4.0}, {"a", 2.0}, {"b", 4.0}, {"d", 5.0}});
    CHECK(truth.placement().at("d") == 1);
    CHECK(truth.placement().at("b") == 2);  // tie with c, smaller id first
    CHECK(truth.placement().at("c") == 3);
    CHECK(truth.placement().at("a") == 4);
    CHECK(truth.top_k(2) == std::set<std::string>{"b", "d"});
    CHECK(truth.top_k(0).empty());
}
