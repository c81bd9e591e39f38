#include "pm/money.hpp"

#include "pm/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace pm {

Money Money::from_double(double amount) {
    if (!std::isfinite(amount)) {
        throw MarketError(ErrorCode::InvalidArgument, "non-finite currency amount");
    }
    // nearbyint honours the default round-to-nearest-even mode.
    return Money(static_cast<std::int64_t>(std::nearbyint(amount * static_cast<double>(kScale))));
}

Money Money::parse(std::string_view text) {
    auto fail = [&] {
        return MarketError(ErrorCode::InvalidArgument, "malformed amount '" + std::string(text) + "'");
    };
    if (text.empty()) throw fail();
    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const auto whole_part = text.substr(0, dot);
    std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole_part.empty() || frac_part.size() > 4) throw fail();

    std::int64_t whole = 0;
    auto [p, ec] = std::from_chars(whole_part.data(), whole_part.data() + whole_part.size(), whole);
    if (ec != std::errc{} || p != whole_part.data() + whole_part.size()) throw fail();

    std::int64_t frac = 0;
    if (!frac_part.empty()) {
        auto [pf, ecf] = std::from_chars(frac_part.data(), frac_part.data() + frac_part.size(), frac);
        if (ecf != std::errc{} || pf != frac_part.data() + frac_part.size()) throw fail();
        for (auto i = frac_part.size(); i < 4; ++i) frac *= 10;
    }
    const std::int64_t ticks = whole * kScale + frac;
    return Money(negative ? -ticks : ticks);
}

std::string Money::str() const {
    const std::int64_t magnitude = ticks_ < 0 ? -ticks_ : ticks_;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%04lld", ticks_ < 0 ? "-" : "",
                  static_cast<long long>(magnitude / kScale),
                  static_cast<long long>(magnitude % kScale));
    return buf;
}

std::string format_decimal4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

}  // namespace pm
