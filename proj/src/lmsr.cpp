#include "pm/lmsr.hpp"

#include "pm/errors.hpp"
#include "pm/kernels.hpp"

#include <cmath>
#include <string>

namespace pm::lmsr {
namespace {

void check_liquidity(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) {
        throw MarketError(ErrorCode::InvalidArgument, "liquidity parameter b must be finite and > 0");
    }
}

double scaled_lse(std::span<const double> q, double b) { return kernels::active().log_sum_exp(q, b); }

}  // namespace

LmsrState::LmsrState(double b, std::size_t outcomes) : b_(b), q_(outcomes, 0.0) {
    check_liquidity(b);
    if (outcomes < 2) throw MarketError(ErrorCode::InvalidArgument, "an LMSR needs at least two outcomes");
}

LmsrState::LmsrState(double b, std::vector<double> inventory) : b_(b), q_(std::move(inventory)) {
    check_liquidity(b);
    if (q_.size() < 2) throw MarketError(ErrorCode::InvalidArgument, "an LMSR needs at least two outcomes");
    for (double qi : q_) {
        if (!std::isfinite(qi)) throw MarketError(ErrorCode::InvalidArgument, "non-finite share inventory");
    }
}

void LmsrState::apply(std::size_t outcome, double delta) {
    if (outcome >= q_.size()) throw MarketError(ErrorCode::UnknownContract, "outcome index out of range");
    q_[outcome] += delta;
}

double cost(const LmsrState& state) { return state.liquidity() * scaled_lse(state.inventory(), state.liquidity()); }

void prices(const LmsrState& state, std::span<double> out) {
    kernels::active().softmax(state.inventory(), state.liquidity(), out);
}

std::vector<double> prices(const LmsrState& state) {
    std::vector<double> out(state.outcomes());
    prices(state, out);
    return out;
}

double price(const LmsrState& state, std::size_t outcome) {
    if (outcome >= state.outcomes()) throw MarketError(ErrorCode::UnknownContract, "outcome index out of range");
    return prices(state)[outcome];
}

double trade_cost(const LmsrState& state, std::size_t outcome, double delta) {
    if (outcome >= state.outcomes()) throw MarketError(ErrorCode::UnknownContract, "outcome index out of range");
    if (delta == 0.0) throw MarketError(ErrorCode::DegenerateOrder, "zero-quantity trade");
    if (!std::isfinite(delta)) throw MarketError(ErrorCode::InvalidArgument, "non-finite trade quantity");

    const double b = state.liquidity();
    std::vector<double> moved(state.inventory().begin(), state.inventory().end());
    moved[outcome] += delta;
    if (!std::isfinite(moved[outcome])) throw MarketError(ErrorCode::InvalidArgument, "inventory overflow");
    return b * scaled_lse(moved, b) - b * scaled_lse(state.inventory(), b);
}

double max_loss(double b, std::size_t outcomes) {
    check_liquidity(b);
    if (outcomes < 2) throw MarketError(ErrorCode::InvalidArgument, "an LMSR needs at least two outcomes");
    return b * std::log(static_cast<double>(outcomes));
}

double shares_to_reach(const LmsrState& state, std::size_t outcome, double target) {
    if (!(target > 0.0 && target < 1.0)) throw MarketError(ErrorCode::InvalidArgument, "target price must be in (0,1)");
    const double p = price(state, outcome);
    return state.liquidity() * (std::log(target) + std::log1p(-p) - std::log(p) - std::log1p(-target));
}

}  // namespace pm::lmsr
