#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace pm {

/// Ledger currency: a signed fixed-point amount with four decimal places.
///
/// Pricing runs in double precision; amounts enter the ledger through
/// `from_double`, which rounds half-to-even exactly once.
class Money {
public:
    static constexpr std::int64_t kScale = 10'000;

    constexpr Money() = default;

    static constexpr Money from_ticks(std::int64_t ticks) { return Money(ticks); }
    static constexpr Money whole(std::int64_t units) { return Money(units * kScale); }
    static Money from_double(double amount);
    /// Accepts "123", "-4.5", "5000.0000"; more than four decimals is an error.
    static Money parse(std::string_view text);

    constexpr std::int64_t ticks() const { return ticks_; }
    double to_double() const { return static_cast<double>(ticks_) / kScale; }
    /// Always four decimals, e.g. "5000.0000".
    std::string str() const;

    constexpr Money operator-() const { return Money(-ticks_); }
    constexpr Money& operator+=(Money other) { ticks_ += other.ticks_; return *this; }
    constexpr Money& operator-=(Money other) { ticks_ -= other.ticks_; return *this; }
    friend constexpr Money operator+(Money a, Money b) { return Money(a.ticks_ + b.ticks_); }
    friend constexpr Money operator-(Money a, Money b) { return Money(a.ticks_ - b.ticks_); }
    friend constexpr Money operator*(Money a, std::int64_t n) { return Money(a.ticks_ * n); }
    friend constexpr auto operator<=>(Money, Money) = default;

private:
    constexpr explicit Money(std::int64_t ticks) : ticks_(ticks) {}
    std::int64_t ticks_ = 0;
};

/// Formats a probability-like value as a 4-decimal string ("0.0417").
std::string format_decimal4(double value);

}  // namespace pm
