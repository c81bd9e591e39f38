#pragma once

// Logarithmic market scoring rule over n mutually exclusive outcomes.
//
//   C(q)   = b * ln(sum_i exp(q_i / b))
//   p_i(q) = exp(q_i / b) / sum_j exp(q_j / b)
//
// Amounts here are in payoff units: one share pays 1 if its outcome occurs.
// Venues scale them to currency.

#include <cstddef>
#include <span>
#include <vector>

namespace pm::lmsr {

class LmsrState {
public:
    /// All-zero inventory over `outcomes` outcomes. Requires b > 0 and outcomes >= 2.
    LmsrState(double b, std::size_t outcomes);
    LmsrState(double b, std::vector<double> inventory);

    double liquidity() const noexcept { return b_; }
    std::size_t outcomes() const noexcept { return q_.size(); }
    std::span<const double> inventory() const noexcept { return q_; }

    /// Commits q_outcome += delta. Pricing functions never call this.
    void apply(std::size_t outcome, double delta);

    friend bool operator==(const LmsrState&, const LmsrState&) = default;

private:
    double b_;
    std::vector<double> q_;
};

double cost(const LmsrState& state);

std::vector<double> prices(const LmsrState& state);
void prices(const LmsrState& state, std::span<double> out);
double price(const LmsrState& state, std::size_t outcome);

/// C(q + delta e_outcome) - C(q). Positive: the trader pays. Does not mutate.
/// Rejects delta == 0 (DegenerateOrder) and outcome >= n (UnknownContract).
///
/// Computed as a difference of two log-sum-exp evaluations, so a trade and
/// its exact reversal price to exact negatives of each other.
double trade_cost(const LmsrState& state, std::size_t outcome, double delta);

/// Worst-case market-maker subsidy b ln n.
double max_loss(double b, std::size_t outcomes);

/// Shares of `outcome` to trade so its price moves from its current value to
/// `target` (0 < target < 1); negative means sell. Closed form:
/// delta = b ln(target (1 - p) / (p (1 - target))).
double shares_to_reach(const LmsrState& state, std::size_t outcome, double target);

}  // namespace pm::lmsr
