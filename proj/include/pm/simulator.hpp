#pragma once

// Agent-based replication harness for the design x elasticity experiment.

#include "pm/errors.hpp"
#include "pm/exchange.hpp"
#include "pm/ideas.hpp"
#include "pm/metrics.hpp"
#include "pm/types.hpp"
#include "pm/venue.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pm::sim {

using Rng = std::mt19937_64;

enum class Strategy { NoisySignal, FavoriteLongshot, Random };
std::string_view to_string(Strategy s) noexcept;
Strategy parse_strategy(std::string_view text);

struct AgentSpec {
    Strategy strategy = Strategy::NoisySignal;
    double noise_sd = 0.5;          // signal noise on the 1..5 quality scale
    double distortion_alpha = 0.65; // Prelec exponent, used by FavoriteLongshot only
    std::int64_t trade_step = 10;   // max shares per action
    double budget_reserve = 0.0;    // cash floor a buy may not cross
};

struct ConfigIssue {
    std::string field;
    std::string message;
};

class ConfigError : public MarketError {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct ExperimentConfig {
    Design design = Design::Multi;
    std::string elasticity = "moderate";  // preset name; ignored when b is set
    std::optional<double> b;
    std::size_t n_agents = 60;
    std::map<Strategy, double> agent_mix{{Strategy::NoisySignal, 1.0}};
    AgentSpec agent;  // parameters shared by all agents; strategy comes from agent_mix
    int rounds = 30;
    std::uint64_t seed = 1;
    std::vector<IdeaContract> ideas;  // empty: load ideas_path, or the synthetic corpus
    std::string ideas_path;
    std::size_t k = kDefaultTopK;
    std::string out_dir;    // empty: write nothing
    bool keep_log = false;  // keep the event log in the result even without out_dir
};

/// Field-by-field validation; empty when the config is usable.
std::vector<ConfigIssue> validate(const ExperimentConfig& config);
double resolve_b(const ExperimentConfig& config);
metrics::CellKey cell_of(const ExperimentConfig& config);

/// belief_i = quality_i + N(0, noise_sd), clamped to [1, 5].
std::vector<double> gen_beliefs(std::span<const double> quality, double noise_sd, Rng& rng);

/// Probability that each idea is in the top k, from one agent's beliefs:
/// a softmax of belief mass at temperature max(noise_sd, 0.05), scaled to sum
/// to k with each entry capped at 1. Equal beliefs give k/n everywhere.
std::vector<double> membership_probabilities(std::span<const double> beliefs, std::size_t k, double noise_sd);

/// Prelec weighting w(p) = exp(-(-ln p)^alpha); alpha = 1 is the identity.
double prelec(double p, double alpha);

/// Per-idea probability of top-k membership as the agent perceives it.
/// Single: membership probabilities (sum k); FavoriteLongshot agents apply
/// prelec() and rescale back to sum k. Multi: the Top probability; distorted
/// agents renormalize w(p) against w(1 - p).
std::vector<double> target_probabilities(const AgentSpec& agent, Design design, std::span<const double> beliefs,
                                         std::size_t k);

/// Per-contract targets on the price scale, in Venue::contracts() order.
/// Single prices sum to 1 across ideas, so the target of an idea share is its
/// probability divided by k. Multi: Top = probability, Flop = 1 - probability.
std::vector<double> target_prices(const AgentSpec& agent, Design design, std::span<const double> beliefs,
                                  std::size_t k);

/// One action opportunity. Informed strategies trade the contract with the
/// largest |target - price| that they can act on: buy when underpriced (within
/// budget_reserve), sell held shares when overpriced. Random agents pick a
/// contract and direction uniformly. Returns nullopt when nothing is feasible.
std::optional<Order> agent_step(const std::string& trader_id, const AgentSpec& agent, const Venue& venue,
                                const Account& account, std::span<const double> targets, Rng& rng);

struct ExperimentResult {
    metrics::RunResult run;
    std::string event_log;  // filled when out_dir or keep_log is set
    nlohmann::json report;
    nlohmann::json snapshot;  // Exchange::snapshot() after settlement
};

/// Opens the venue, creates n_agents accounts with the default endowment,
/// runs `rounds` shuffled rounds, settles with k and computes all metrics.
/// Deterministic per seed. Writes events.jsonl, performance.csv and
/// report.json into out_dir when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SuiteResult {
    std::vector<metrics::RunResult> runs;
    metrics::CellReport report;
};

/// All six design x preset cells for seeds base.seed .. base.seed + seeds - 1.
/// Writes performance.csv, report.json, figure2.csv and figure2.txt into out_dir when set.
SuiteResult run_suite(const ExperimentConfig& base, std::size_t seeds, const std::string& out_dir);

}  // namespace pm::sim
