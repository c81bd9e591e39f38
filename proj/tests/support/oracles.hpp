#pragma once

// Test-only reference implementations. These deliberately take different
// routes from the library code they check.

#include "pm/ideas.hpp"
#include "pm/ledger.hpp"
#include "pm/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace oracle {

// Naive cost in long double without max-shifting; only valid for modest q/b.
inline long double naive_cost(std::span<const double> q, double b) {
    long double sum = 0.0L;
    for (double qi : q) sum += std::exp(static_cast<long double>(qi) / b);
    return static_cast<long double>(b) * std::log(sum);
}

inline std::vector<long double> naive_prices(std::span<const double> q, double b) {
    std::vector<long double> e;
    long double sum = 0.0L;
    for (double qi : q) {
        e.push_back(std::exp(static_cast<long double>(qi) / b));
        sum += e.back();
    }
    for (auto& v : e) v /= sum;
    return e;
}

// O(n^2) concordant/discordant counting with tie-b correction.
inline double pair_count_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0 && dy == 0) continue;
            if (dx == 0) {
                ++ties_x;
            } else if (dy == 0) {
                ++ties_y;
            } else if ((dx > 0) == (dy > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double denom = std::sqrt(static_cast<double>(concordant + discordant + ties_x)) *
                         std::sqrt(static_cast<double>(concordant + discordant + ties_y));
    return static_cast<double>(concordant - discordant) / denom;
}

// Settlement by enumeration: for every trader, for every (idea, side) they
// could hold, add shares x 100 x [claim is true].
inline std::map<std::string, std::int64_t> brute_force_payouts(const std::map<std::string, pm::Account>& accounts,
                                                               const std::vector<std::string>& ideas,
                                                               const std::map<std::string, double>& quality,
                                                               std::size_t k, std::int64_t payout) {
    // Top-k membership by counting how many ideas beat each one (ties: smaller id wins).
    auto in_top = [&](const std::string& id) {
        std::size_t better = 0;
        for (const auto& other : ideas) {
            if (other == id) continue;
            const double qo = quality.at(other), qi = quality.at(id);
            if (qo > qi || (qo == qi && other < id)) ++better;
        }
        return better < k;
    };
    std::map<std::string, std::int64_t> out;
    for (const auto& [trader, account] : accounts) {
        std::int64_t total = 0;
        for (const auto& id : ideas) {
            for (pm::Side side : {pm::Side::Idea, pm::Side::Top, pm::Side::Flop}) {
                const std::int64_t shares = account.holding({id, side});
                const bool claim = side == pm::Side::Flop ? !in_top(id) : in_top(id);
                if (claim) total += shares * payout;
            }
        }
        out[trader] = total;
    }
    return out;
}

}  // namespace oracle
