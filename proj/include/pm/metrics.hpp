#pragma once

// Forecast-accuracy and trader-performance measures.

#include "pm/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pm::metrics {

/// (1/n) sum_i |actual_i - forecast_i| / actual_i over placement numbers.
/// Errors on top-placed ideas weigh most, because the divisor is the actual placement.
double mape(const Ranking& actual, const Ranking& forecast);

/// Kendall tau-b between two rankings of the same ideas.
double kendall_tau(const Ranking& a, const Ranking& b);

/// Kendall tau-b over paired scores, ties allowed (Knight's O(n log n) algorithm).
/// NaN when either side is entirely tied.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

struct PerformanceRecord {
    std::string trader_id;
    double raw = 0.0;         // disposable cash + settlement payout
    double normalized = 0.0;  // raw / normalizer
    double normalizer = 0.0;
};

/// raw = cash + payout, normalized = raw / normalizer. normalizer must be > 0.
PerformanceRecord trading_performance(const std::string& trader_id, double cash, double payout, double normalizer);

/// Mean trades per trader in one venue run; nullopt when the run had no trades
/// (such runs are excluded from summaries).
std::optional<double> transactions_per_trader(std::int64_t total_trades, std::size_t traders);

struct CellKey {
    std::string design;      // "single" | "multi"
    std::string elasticity;  // preset name, or "b=<value>" for a custom b

    std::string label() const { return design + "/" + elasticity; }
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct RunResult {
    CellKey cell;
    std::uint64_t seed = 0;
    double b = 0.0;
    Ranking forecast;
    Ranking actual;
    double mape = 0.0;
    double tau = 0.0;
    std::int64_t total_trades = 0;
    std::size_t traders = 0;
    std::vector<PerformanceRecord> performance;  // empty when the run had no trades
    double bottom_stratum_mean_price = 0.0;
};

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation; 0 when n < 2
};
Moments moments(std::span<const double> values);

struct CellSummary {
    CellKey cell;
    double b = 0.0;
    std::size_t runs = 0;
    Moments normalized_performance;  // pooled over every trader of every run
    Moments mape;
    Moments tau;
};

struct CellReport {
    std::vector<CellSummary> cells;  // only cells that have at least one usable run
    /// Mean over seeds of tau between cell rankings (same seed), plus an
    /// "experts" row/column against the actual ranking; keyed by cell label.
    std::map<std::string, std::map<std::string, double>> tau_matrix;
};

CellReport summarize_cells(std::span<const RunResult> runs);

nlohmann::json to_json(const CellReport& report);
/// `trader_id,cell,raw,normalized,seed,transactions_per_trader,venue_trades,venue_traders`.
void write_performance_csv(std::ostream& out, std::span<const RunResult> runs);
/// Cell means laid out design x elasticity, one row per cell.
void write_cell_means_csv(std::ostream& out, const CellReport& report);
/// Human-readable two-row table (single, multi) x (low, moderate, high).
void write_figure_table(std::ostream& out, const CellReport& report);

}  // namespace pm::metrics
