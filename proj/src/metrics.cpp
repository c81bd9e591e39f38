#include "pm/metrics.hpp"

#include "pm/errors.hpp"
#include "pm/venue.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace pm::metrics {

namespace {

void require_same_ideas(const Ranking& a, const Ranking& b) {
    if (a.size() != b.size() ||
        !std::equal(a.placement().begin(), a.placement().end(), b.placement().begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw MarketError(ErrorCode::InvalidArgument, "rankings cover different idea sets");
    }
    if (a.size() == 0) throw MarketError(ErrorCode::InvalidArgument, "empty ranking");
}

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

// Sum of t(t-1)/2 over runs of equal values in an already sorted range.
template <class It, class Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
    std::int64_t total = 0;
    while (first != last) {
        It run_end = std::next(first);
        while (run_end != last && eq(*first, *run_end)) ++run_end;
        total += pairs(std::distance(first, run_end));
        first = run_end;
    }
    return total;
}

// Stable merge sort on the y values; returns the number of exchanges needed.
std::int64_t sort_counting_exchanges(std::vector<double>& y, std::vector<double>& scratch, std::size_t lo,
                                     std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = sort_counting_exchanges(y, scratch, lo, mid) + sort_counting_exchanges(y, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (y[i] <= y[j]) {
            scratch[k++] = y[i++];
        } else {
            swaps += static_cast<std::int64_t>(mid - i);
            scratch[k++] = y[j++];
        }
    }
    while (i < mid) scratch[k++] = y[i++];
    while (j < hi) scratch[k++] = y[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              y.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

}  // namespace

double mape(const Ranking& actual, const Ranking& forecast) {
    require_same_ideas(actual, forecast);
    double total = 0.0;
    for (const auto& [id, a] : actual.placement()) {
        total += std::fabs(static_cast<double>(a - forecast.at(id))) / static_cast<double>(a);
    }
    return total / static_cast<double>(actual.size());
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw MarketError(ErrorCode::InvalidArgument, "kendall_tau_b: length mismatch");
    const auto n = static_cast<std::int64_t>(x.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();

    std::vector<std::pair<double, double>> pts(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) pts[i] = {x[i], y[i]};
    std::sort(pts.begin(), pts.end());

    const std::int64_t n0 = pairs(n);
    const std::int64_t tx = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
    const std::int64_t txy = tied_pairs(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; });

    std::vector<double> ys(x.size());
    for (std::size_t i = 0; i < pts.size(); ++i) ys[i] = pts[i].second;
    std::vector<double> scratch(ys.size());
    const std::int64_t swaps = sort_counting_exchanges(ys, scratch, 0, ys.size());
    const std::int64_t ty = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

    const double numerator = static_cast<double>(n0 - tx - ty + txy - 2 * swaps);
    // One sqrt of the exact integer product, so identical or reversed inputs give exactly +-1.
    const double denominator = std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
    if (denominator == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return numerator / denominator;
}

double kendall_tau(const Ranking& a, const Ranking& b) {
    require_same_ideas(a, b);
    std::vector<double> xa, xb;
    xa.reserve(a.size());
    xb.reserve(b.size());
    for (const auto& [id, place] : a.placement()) {
        xa.push_back(place);
        xb.push_back(b.at(id));
    }
    return kendall_tau_b(xa, xb);
}

PerformanceRecord trading_performance(const std::string& trader_id, double cash, double payout, double normalizer) {
    if (!(normalizer > 0.0)) throw MarketError(ErrorCode::InvalidArgument, "normalizer must be positive");
    const double raw = cash + payout;
    return {trader_id, raw, raw / normalizer, normalizer};
}

std::optional<double> transactions_per_trader(std::int64_t total_trades, std::size_t traders) {
    if (total_trades <= 0 || traders == 0) return std::nullopt;
    return static_cast<double>(total_trades) / static_cast<double>(traders);
}

Moments moments(std::span<const double> values) {
    Moments m;
    m.n = values.size();
    if (m.n == 0) return m;
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(m.n);
    if (m.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    }
    return m;
}

CellReport summarize_cells(std::span<const RunResult> runs) {
    std::map<CellKey, std::vector<const RunResult*>> by_cell;
    for (const auto& run : runs) {
        if (run.performance.empty()) continue;
        by_cell[run.cell].push_back(&run);
    }

    CellReport report;
    for (const auto& [cell, members] : by_cell) {
        std::vector<double> perf, mapes, taus;
        for (const RunResult* r : members) {
            for (const auto& p : r->performance) perf.push_back(p.normalized);
            mapes.push_back(r->mape);
            taus.push_back(r->tau);
        }
        report.cells.push_back({cell, members.front()->b, members.size(), moments(perf), moments(mapes), moments(taus)});
    }

    // Pairwise tau, matched by seed.
    const std::string experts = "experts";
    std::map<std::string, std::map<std::string, std::vector<double>>> acc;
    for (const auto& [cell_a, runs_a] : by_cell) {
        for (const RunResult* ra : runs_a) acc[cell_a.label()][experts].push_back(ra->tau);
        for (const auto& [cell_b, runs_b] : by_cell) {
            for (const RunResult* ra : runs_a) {
                for (const RunResult* rb : runs_b) {
                    if (ra->seed == rb->seed) acc[cell_a.label()][cell_b.label()].push_back(kendall_tau(ra->forecast, rb->forecast));
                }
            }
        }
    }
    for (const auto& [row, cols] : acc) {
        for (const auto& [col, values] : cols) {
            const double mean = moments(values).mean;
            report.tau_matrix[row][col] = mean;
            if (col == experts) report.tau_matrix[experts][row] = mean;
        }
    }
    if (!report.tau_matrix.empty()) report.tau_matrix[experts][experts] = 1.0;
    return report;
}

namespace {

nlohmann::json to_json(const Moments& m) { return {{"n", m.n}, {"mean", m.mean}, {"sd", m.sd}}; }

}  // namespace

nlohmann::json to_json(const CellReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"design", c.cell.design},
                         {"elasticity", c.cell.elasticity},
                         {"b", c.b},
                         {"runs", c.runs},
                         {"normalized_performance", to_json(c.normalized_performance)},
                         {"mape", to_json(c.mape)},
                         {"tau", to_json(c.tau)}});
    }
    return {{"cells", std::move(cells)}, {"tau_matrix", report.tau_matrix}};
}

void write_performance_csv(std::ostream& out, std::span<const RunResult> runs) {
    out << "trader_id,cell,raw,normalized,seed,transactions_per_trader,venue_trades,venue_traders\n";
    char buf[256];
    for (const auto& run : runs) {
        for (const auto& p : run.performance) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%llu,%.17g,%lld,%zu\n", p.raw, p.normalized,
                          static_cast<unsigned long long>(run.seed), p.normalizer,
                          static_cast<long long>(run.total_trades), run.traders);
            out << p.trader_id << ',' << run.cell.label() << buf;
        }
    }
}

void write_cell_means_csv(std::ostream& out, const CellReport& report) {
    out << "design,elasticity,b,runs,mean_normalized,sd_normalized,n_traders,mean_mape,mean_tau\n";
    char buf[256];
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%zu,%.17g,%.17g,%zu,%.17g,%.17g\n", c.cell.design.c_str(),
                      c.cell.elasticity.c_str(), c.b, c.runs, c.normalized_performance.mean,
                      c.normalized_performance.sd, c.normalized_performance.n, c.mape.mean, c.tau.mean);
        out << buf;
    }
}

void write_figure_table(std::ostream& out, const CellReport& report) {
    const char* designs[] = {"single", "multi"};
    const char* columns[] = {"low", "moderate", "high"};
    char buf[128];
    out << "Mean normalized trading performance (sd), by design x price elasticity\n";
    std::snprintf(buf, sizeof buf, "%-8s %22s %22s %22s\n", "", "low (b=877)", "moderate (b=548)", "high (b=219)");
    out << buf;
    for (const char* d : designs) {
        std::snprintf(buf, sizeof buf, "%-8s", d);
        out << buf;
        for (const char* e : columns) {
            auto it = std::find_if(report.cells.begin(), report.cells.end(),
                                   [&](const CellSummary& c) { return c.cell.design == d && c.cell.elasticity == e; });
            if (it == report.cells.end()) {
                std::snprintf(buf, sizeof buf, " %22s", "absent");
            } else {
                std::snprintf(buf, sizeof buf, " %12.2f (%7.2f)", it->normalized_performance.mean,
                              it->normalized_performance.sd);
            }
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace pm::metrics
