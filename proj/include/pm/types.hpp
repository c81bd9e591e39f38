#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pm {

enum class Design { Single, Multi };
/// Idea is the only side in a Single venue; Top and Flop exist only in Multi.
enum class Side { Idea, Top, Flop };
enum class Direction { Buy, Sell };

std::string_view to_string(Design d) noexcept;
std::string_view to_string(Side s) noexcept;
std::string_view to_string(Direction d) noexcept;
Design parse_design(std::string_view text);
Side parse_side(std::string_view text);
Direction parse_direction(std::string_view text);

struct ContractRef {
    std::string idea_id;
    Side side = Side::Idea;

    friend auto operator<=>(const ContractRef&, const ContractRef&) = default;
};

struct ContractPrice {
    std::string idea_id;
    Side side = Side::Idea;
    double price = 0.0;

    friend bool operator==(const ContractPrice&, const ContractPrice&) = default;
};

struct Order {
    std::string trader_id;
    ContractRef contract;
    Direction direction = Direction::Buy;
    std::int64_t quantity = 0;
};

/// Placement numbers 1..n keyed by idea id (1 = best). Always a permutation.
class Ranking {
public:
    Ranking() = default;
    /// Throws InvalidArgument unless the values are exactly {1, ..., n}.
    explicit Ranking(std::map<std::string, int> placement);
    /// Ideas listed best first.
    static Ranking from_order(const std::vector<std::string>& best_first);

    const std::map<std::string, int>& placement() const noexcept { return placement_; }
    int at(const std::string& idea_id) const;
    std::size_t size() const noexcept { return placement_.size(); }
    std::vector<std::string> best_first() const;

    friend bool operator==(const Ranking&, const Ranking&) = default;

private:
    std::map<std::string, int> placement_;
};

}  // namespace pm
