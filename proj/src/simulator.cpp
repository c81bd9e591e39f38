#include "pm/simulator.hpp"

#include "pm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pm::sim {

namespace {

constexpr double kMinSoftness = 0.05;
constexpr double kTargetFloor = 1e-3;
constexpr double kMinGap = 1e-3;

std::string describe(const std::vector<ConfigIssue>& issues) {
    std::string out = "invalid experiment config:";
    for (const auto& i : issues) out += " " + i.field + ": " + i.message + ";";
    return out;
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::NoisySignal: return "noisy";
        case Strategy::FavoriteLongshot: return "longshot";
        case Strategy::Random: return "random";
    }
    return "noisy";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "noisy") return Strategy::NoisySignal;
    if (text == "longshot") return Strategy::FavoriteLongshot;
    if (text == "random") return Strategy::Random;
    throw MarketError(ErrorCode::InvalidArgument, "strategy must be noisy, longshot or random");
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : MarketError(ErrorCode::Config, describe(issues)), issues_(std::move(issues)) {}

std::vector<ConfigIssue> validate(const ExperimentConfig& c) {
    std::vector<ConfigIssue> issues;
    if (c.b) {
        if (!(*c.b > 0.0) || !std::isfinite(*c.b)) issues.push_back({"b", "must be finite and > 0"});
    } else if (!find_preset(c.elasticity)) {
        issues.push_back({"elasticity", "must be high, moderate or low"});
    }
    if (c.n_agents < 1) issues.push_back({"n_agents", "must be >= 1"});
    if (c.rounds < 1) issues.push_back({"rounds", "must be >= 1"});
    if (c.k < 1) issues.push_back({"k", "must be >= 1"});
    double total = 0.0;
    for (const auto& [s, share] : c.agent_mix) {
        if (share < 0.0) issues.push_back({"agent_mix", "proportions must be non-negative"});
        total += share;
    }
    if (std::fabs(total - 1.0) > 1e-9) issues.push_back({"agent_mix", "proportions must sum to 1"});
    if (c.agent.noise_sd < 0.0 || !std::isfinite(c.agent.noise_sd)) issues.push_back({"noise_sd", "must be >= 0"});
    if (!(c.agent.distortion_alpha > 0.0 && c.agent.distortion_alpha <= 1.0)) {
        issues.push_back({"distortion_alpha", "must be in (0, 1]"});
    }
    if (c.agent.trade_step < 1) issues.push_back({"trade_step", "must be >= 1"});
    if (c.agent.budget_reserve < 0.0) issues.push_back({"budget_reserve", "must be >= 0"});
    return issues;
}

double resolve_b(const ExperimentConfig& c) {
    if (c.b) return *c.b;
    if (auto preset = find_preset(c.elasticity)) return preset->b;
    throw ConfigError(std::vector<ConfigIssue>{{"elasticity", "must be high, moderate or low"}});
}

metrics::CellKey cell_of(const ExperimentConfig& c) {
    std::string elasticity = c.elasticity;
    if (c.b) {
        std::ostringstream os;
        os << "b=" << *c.b;
        elasticity = os.str();
    }
    return {std::string(to_string(c.design)), elasticity};
}

std::vector<double> gen_beliefs(std::span<const double> quality, double noise_sd, Rng& rng) {
    std::vector<double> beliefs(quality.begin(), quality.end());
    if (noise_sd == 0.0) return beliefs;
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (double& b : beliefs) b = std::clamp(b + noise(rng), 1.0, 5.0);
    return beliefs;
}

namespace {

// Finds c with sum_i min(1, c w_i) == k and returns the capped values.
std::vector<double> capped_scale(std::span<const double> weights, double k) {
    const std::size_t n = weights.size();
    std::vector<double> out(n, 1.0);
    if (k >= static_cast<double>(n)) return out;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    // Suffix sums from the small end; subtracting capped weights from a total would cancel.
    std::vector<double> tail(n + 1, 0.0);
    for (std::size_t j = n; j-- > 0;) tail[j] = tail[j + 1] + weights[order[j]];
    for (std::size_t capped = 0; capped < n; ++capped) {
        const double scale = (k - static_cast<double>(capped)) / tail[capped];
        if (scale * weights[order[capped]] <= 1.0) {
            for (std::size_t j = capped; j < n; ++j) out[order[j]] = scale * weights[order[j]];
            return out;
        }
    }
    return out;
}

}  // namespace

std::vector<double> membership_probabilities(std::span<const double> beliefs, std::size_t k, double noise_sd) {
    const double temperature = std::max(noise_sd, kMinSoftness);
    const double top = *std::max_element(beliefs.begin(), beliefs.end());
    std::vector<double> weights(beliefs.size());
    for (std::size_t i = 0; i < beliefs.size(); ++i) weights[i] = std::exp((beliefs[i] - top) / temperature);
    return capped_scale(weights, static_cast<double>(k));
}

double prelec(double p, double alpha) {
    if (alpha == 1.0) return p;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    return std::exp(-std::pow(-std::log(p), alpha));
}

std::vector<double> target_probabilities(const AgentSpec& agent, Design design, std::span<const double> beliefs,
                                         std::size_t k) {
    auto clamp_target = [](double p) { return std::clamp(p, kTargetFloor, 1.0 - kTargetFloor); };
    auto probs = membership_probabilities(beliefs, k, agent.noise_sd);
    if (agent.strategy != Strategy::FavoriteLongshot || agent.distortion_alpha == 1.0) return probs;
    if (design == Design::Single) {
        std::vector<double> weighted(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) weighted[i] = prelec(clamp_target(probs[i]), agent.distortion_alpha);
        return capped_scale(weighted, std::accumulate(probs.begin(), probs.end(), 0.0));
    }
    for (double& p : probs) {
        const double wt = prelec(clamp_target(p), agent.distortion_alpha);
        const double wf = prelec(clamp_target(1.0 - p), agent.distortion_alpha);
        p = wt / (wt + wf);
    }
    return probs;
}

std::vector<double> target_prices(const AgentSpec& agent, Design design, std::span<const double> beliefs,
                                  std::size_t k) {
    const auto probs = target_probabilities(agent, design, beliefs, k);
    std::vector<double> targets;
    if (design == Design::Single) {
        targets.reserve(probs.size());
        for (double p : probs) targets.push_back(std::clamp(p / static_cast<double>(k), kTargetFloor, 1.0 - kTargetFloor));
        return targets;
    }
    targets.reserve(2 * probs.size());
    for (double p : probs) {
        const double top = std::clamp(p, kTargetFloor, 1.0 - kTargetFloor);
        targets.push_back(top);
        targets.push_back(1.0 - top);
    }
    return targets;
}

namespace {

// Largest quantity <= limit whose buy keeps cash at or above the reserve.
std::int64_t affordable(const Venue& venue, const ContractRef& c, std::int64_t limit, const Account& account,
                        double reserve) {
    const double budget = account.cash.to_double() - reserve;
    std::int64_t lo = 0, hi = limit;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo + 1) / 2;
        if (venue.quote(c, Direction::Buy, mid).charge.to_double() <= budget) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

std::size_t market_of(const Venue& venue, std::size_t contract_index) {
    return venue.design() == Design::Single ? 0 : contract_index / 2;
}

}  // namespace

std::optional<Order> agent_step(const std::string& trader_id, const AgentSpec& agent, const Venue& venue,
                                const Account& account, std::span<const double> targets, Rng& rng) {
    if (venue.settled()) return std::nullopt;
    const auto contracts = venue.contracts();

    if (agent.strategy == Strategy::Random) {
        std::uniform_int_distribution<std::size_t> pick(0, contracts.size() - 1);
        std::uniform_int_distribution<std::int64_t> size(1, agent.trade_step);
        const ContractRef& c = contracts[pick(rng)];
        const std::int64_t want = size(rng);
        const std::int64_t held = account.holding(c);
        const bool sell = held > 0 && std::bernoulli_distribution(0.5)(rng);
        if (sell) return Order{trader_id, c, Direction::Sell, std::min(want, held)};
        const std::int64_t qty = affordable(venue, c, want, account, agent.budget_reserve);
        if (qty == 0) return std::nullopt;
        return Order{trader_id, c, Direction::Buy, qty};
    }

    const auto snapshot = venue.price_snapshot();
    struct Candidate {
        double gap;
        std::size_t index;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < contracts.size(); ++i) {
        const double gap = targets[i] - snapshot[i].price;
        if (std::fabs(gap) < kMinGap) continue;
        if (gap < 0.0 && account.holding(contracts[i]) == 0) continue;
        candidates.push_back({gap, i});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return std::fabs(a.gap) > std::fabs(b.gap); });

    for (const auto& cand : candidates) {
        const ContractRef& c = contracts[cand.index];
        const auto& state = venue.market(market_of(venue, cand.index));
        const std::size_t outcome = venue.design() == Design::Single ? cand.index : cand.index % 2;
        const double to_target = lmsr::shares_to_reach(state, outcome, targets[cand.index]);
        const std::int64_t wanted =
            std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(std::fabs(to_target))), 1, agent.trade_step);
        if (cand.gap > 0.0) {
            const std::int64_t qty = affordable(venue, c, wanted, account, agent.budget_reserve);
            if (qty > 0) return Order{trader_id, c, Direction::Buy, qty};
        } else {
            return Order{trader_id, c, Direction::Sell, std::min(wanted, account.holding(c))};
        }
    }
    return std::nullopt;
}

namespace {

std::vector<IdeaContract> resolve_ideas(const ExperimentConfig& c) {
    if (!c.ideas.empty()) return c.ideas;
    if (!c.ideas_path.empty()) return load_ideas_csv(c.ideas_path);
    return synthetic_ideas();
}

std::vector<Strategy> assign_strategies(const std::map<Strategy, double>& mix, std::size_t n) {
    // Largest-remainder apportionment; ties go to the earlier strategy.
    std::vector<std::pair<Strategy, double>> shares(mix.begin(), mix.end());
    std::vector<std::size_t> counts(shares.size());
    std::size_t assigned = 0;
    std::vector<std::pair<double, std::size_t>> remainders;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double exact = shares[i].second * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n && r < remainders.size(); ++r, ++assigned) ++counts[remainders[r].second];
    std::vector<Strategy> out;
    for (std::size_t i = 0; i < shares.size(); ++i) out.insert(out.end(), counts[i], shares[i].first);
    return out;
}

double bottom_stratum_mean_price(const Venue& venue) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& idea : venue.ideas()) {
        if (idea.stratum != Stratum::Low) continue;
        const Side side = venue.design() == Design::Single ? Side::Idea : Side::Top;
        total += venue.price({idea.idea_id, side});
        ++count;
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (auto issues = validate(config); !issues.empty()) throw ConfigError(std::move(issues));
    const auto ideas = resolve_ideas(config);
    if (config.k > ideas.size()) throw ConfigError(std::vector<ConfigIssue>{{"k", "must not exceed the number of ideas"}});
    const GroundTruth truth = GroundTruth::from_ideas(ideas);
    const double b = resolve_b(config);
    const auto cell = cell_of(config);

    std::int64_t tick = 0;
    Exchange exchange([&tick] { return ++tick; });
    std::ostringstream log;
    const bool want_log = config.keep_log || !config.out_dir.empty();
    if (want_log) exchange.attach_log(&log);

    const std::string venue_id = cell.label() + "/seed" + std::to_string(config.seed);
    exchange.open_venue(venue_id, config.design, ideas, b);

    const auto strategies = assign_strategies(config.agent_mix, config.n_agents);
    std::vector<std::string> trader_ids;
    std::vector<AgentSpec> agents;
    std::vector<std::vector<double>> targets;
    std::vector<double> quality;
    for (const auto& idea : ideas) quality.push_back(idea.quality_mean);

    for (std::size_t i = 0; i < config.n_agents; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "a%03zu", i + 1);
        trader_ids.emplace_back(id);
        exchange.create_account(venue_id, trader_ids.back());
        AgentSpec spec = config.agent;
        spec.strategy = strategies[i];
        std::seed_seq seq{config.seed, static_cast<std::uint64_t>(i), std::uint64_t{0xB3E1}};
        Rng belief_rng(seq);
        const auto beliefs = gen_beliefs(quality, spec.noise_sd, belief_rng);
        targets.push_back(target_prices(spec, config.design, beliefs, config.k));
        agents.push_back(spec);
    }

    Rng rng(config.seed);
    std::vector<std::size_t> order(config.n_agents);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int round = 0; round < config.rounds; ++round) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            auto next = exchange.read(venue_id, [&](const Venue& v, const Ledger& l) {
                return agent_step(trader_ids[idx], agents[idx], v, l.account(trader_ids[idx]), targets[idx], rng);
            });
            if (next) exchange.execute(venue_id, *next);
        }
    }

    ExperimentResult result;
    metrics::RunResult& run = result.run;
    run.cell = cell;
    run.seed = config.seed;
    run.b = b;
    run.actual = Ranking(truth.placement());
    exchange.read(venue_id, [&](const Venue& v, const Ledger& l) {
        run.forecast = v.final_ranking();
        run.bottom_stratum_mean_price = bottom_stratum_mean_price(v);
        run.total_trades = l.last_seq();
        run.traders = l.accounts().size();
        return 0;
    });
    run.mape = metrics::mape(run.actual, run.forecast);
    run.tau = metrics::kendall_tau(run.actual, run.forecast);

    const Settlement settlement = exchange.settle(venue_id, truth, config.k);
    if (auto normalizer = metrics::transactions_per_trader(run.total_trades, run.traders)) {
        exchange.read(venue_id, [&](const Venue&, const Ledger& l) {
            for (const auto& [id, account] : l.accounts()) {
                const Money payout = settlement.payouts.at(id);
                run.performance.push_back(
                    metrics::trading_performance(id, (account.cash - payout).to_double(), payout.to_double(), *normalizer));
            }
            return 0;
        });
    }

    result.report = {{"cell", cell.label()},
                     {"design", cell.design},
                     {"elasticity", cell.elasticity},
                     {"b", b},
                     {"seed", config.seed},
                     {"agents", config.n_agents},
                     {"rounds", config.rounds},
                     {"k", config.k},
                     {"total_trades", run.total_trades},
                     {"mape", run.mape},
                     {"kendall_tau", run.tau},
                     {"forecast", run.forecast.best_first()},
                     {"actual", run.actual.best_first()},
                     {"top_k", settlement.top_k},
                     {"bottom_stratum_mean_price", run.bottom_stratum_mean_price}};
    const std::array<metrics::RunResult, 1> one{run};
    result.report["summary"] = metrics::to_json(metrics::summarize_cells(one));

    result.snapshot = exchange.snapshot();
    if (want_log) result.event_log = log.str();
    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        const std::filesystem::path dir(config.out_dir);
        std::ofstream(dir / "events.jsonl") << result.event_log;
        std::ofstream perf(dir / "performance.csv");
        metrics::write_performance_csv(perf, one);
        std::ofstream(dir / "report.json") << result.report.dump(2) << '\n';
    }
    return result;
}

SuiteResult run_suite(const ExperimentConfig& base, std::size_t seeds, const std::string& out_dir) {
    SuiteResult suite;
    for (Design design : {Design::Single, Design::Multi}) {
        for (const auto& preset : kElasticityPresets) {
            for (std::size_t s = 0; s < seeds; ++s) {
                ExperimentConfig config = base;
                config.design = design;
                config.elasticity = std::string(preset.name);
                config.b.reset();
                config.seed = base.seed + s;
                config.out_dir.clear();
                config.keep_log = false;
                suite.runs.push_back(run_experiment(config).run);
            }
        }
    }
    suite.report = metrics::summarize_cells(suite.runs);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        std::ofstream perf(dir / "performance.csv");
        metrics::write_performance_csv(perf, suite.runs);
        std::ofstream(dir / "report.json") << metrics::to_json(suite.report).dump(2) << '\n';
        std::ofstream means(dir / "figure2.csv");
        metrics::write_cell_means_csv(means, suite.report);
        std::ofstream table(dir / "figure2.txt");
        metrics::write_figure_table(table, suite.report);
    }
    return suite;
}

}  // namespace pm::sim
