#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pm {

enum class ErrorCode {
    InvalidArgument,
    DuplicateId,
    UnknownVenue,
    UnknownTrader,
    UnknownContract,
    DegenerateOrder,
    InsufficientCash,
    InsufficientHoldings,
    VenueSettled,
    TruthMismatch,
    ReplayGap,
    ReplayCorrupt,
    Config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Amounts attached to InsufficientCash / InsufficientHoldings rejections.
struct Shortfall {
    double required = 0.0;
    double available = 0.0;
};

class MarketError : public std::runtime_error {
public:
    MarketError(ErrorCode code, const std::string& what,
                std::optional<Shortfall> shortfall = std::nullopt)
        : std::runtime_error(what), code_(code), shortfall_(shortfall) {}

    ErrorCode code() const noexcept { return code_; }
    const std::optional<Shortfall>& shortfall() const noexcept { return shortfall_; }

private:
    ErrorCode code_;
    std::optional<Shortfall> shortfall_;
};

/// Raised while rebuilding state from an event log; `seq` names the offending record
/// (the trade seq when one is present, otherwise 0) and `line` the 1-based line number.
class ReplayError : public MarketError {
public:
    ReplayError(ErrorCode code, std::int64_t seq, std::size_t line, const std::string& what)
        : MarketError(code, what), seq_(seq), line_(line) {}

    std::int64_t seq() const noexcept { return seq_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::int64_t seq_;
    std::size_t line_;
};

}  // namespace pm
