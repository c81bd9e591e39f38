#include "pm/types.hpp"

#include "pm/errors.hpp"

#include <vector>

namespace pm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownVenue: return "UnknownVenue";
        case ErrorCode::UnknownTrader: return "UnknownTrader";
        case ErrorCode::UnknownContract: return "UnknownContract";
        case ErrorCode::DegenerateOrder: return "DegenerateOrder";
        case ErrorCode::InsufficientCash: return "InsufficientCash";
        case ErrorCode::InsufficientHoldings: return "InsufficientHoldings";
        case ErrorCode::VenueSettled: return "VenueSettled";
        case ErrorCode::TruthMismatch: return "TruthMismatch";
        case ErrorCode::ReplayGap: return "ReplayGap";
        case ErrorCode::ReplayCorrupt: return "ReplayCorrupt";
        case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

std::string_view to_string(Design d) noexcept { return d == Design::Single ? "single" : "multi"; }

std::string_view to_string(Side s) noexcept {
    switch (s) {
        case Side::Idea: return "idea";
        case Side::Top: return "top";
        case Side::Flop: return "flop";
    }
    return "idea";
}

std::string_view to_string(Direction d) noexcept { return d == Direction::Buy ? "buy" : "sell"; }

Design parse_design(std::string_view text) {
    if (text == "single") return Design::Single;
    if (text == "multi") return Design::Multi;
    throw MarketError(ErrorCode::InvalidArgument, "design must be single or multi, got '" + std::string(text) + "'");
}

Side parse_side(std::string_view text) {
    if (text == "idea") return Side::Idea;
    if (text == "top") return Side::Top;
    if (text == "flop") return Side::Flop;
    throw MarketError(ErrorCode::InvalidArgument, "side must be idea, top or flop, got '" + std::string(text) + "'");
}

Direction parse_direction(std::string_view text) {
    if (text == "buy") return Direction::Buy;
    if (text == "sell") return Direction::Sell;
    throw MarketError(ErrorCode::InvalidArgument, "direction must be buy or sell, got '" + std::string(text) + "'");
}

Ranking::Ranking(std::map<std::string, int> placement) : placement_(std::move(placement)) {
    const auto n = placement_.size();
    std::vector<bool> seen(n + 1, false);
    for (const auto& [id, place] : placement_) {
        if (place < 1 || static_cast<std::size_t>(place) > n || seen[static_cast<std::size_t>(place)]) {
            throw MarketError(ErrorCode::InvalidArgument, "placements must be a permutation of 1..n");
        }
        seen[static_cast<std::size_t>(place)] = true;
    }
}

Ranking Ranking::from_order(const std::vector<std::string>& best_first) {
    std::map<std::string, int> placement;
    for (std::size_t i = 0; i < best_first.size(); ++i) {
        if (!placement.emplace(best_first[i], static_cast<int>(i + 1)).second) {
            throw MarketError(ErrorCode::DuplicateId, "duplicate idea in ranking: " + best_first[i]);
        }
    }
    return Ranking(std::move(placement));
}

int Ranking::at(const std::string& idea_id) const {
    auto it = placement_.find(idea_id);
    if (it == placement_.end()) throw MarketError(ErrorCode::UnknownContract, "idea not ranked: " + idea_id);
    return it->second;
}

std::vector<std::string> Ranking::best_first() const {
    std::vector<std::string> out(placement_.size());
    for (const auto& [id, place] : placement_) out[static_cast<std::size_t>(place - 1)] = id;
    return out;
}

}  // namespace pm
