// pm: command-line entry point for simulations, replay and the trading service.

#include "pm/errors.hpp"
#include "pm/exchange.hpp"
#include "pm/service.hpp"
#include "pm/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;

int fail(const json& error) {
    std::cerr << error.dump() << '\n';
    return 1;
}

pm::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Play-money prediction markets for idea evaluation"};
    app.require_subcommand(1);

    pm::sim::ExperimentConfig sim;
    std::string design = "multi";
    std::string strategy = "noisy";
    std::optional<double> b;
    auto* simulate = app.add_subcommand("simulate", "Run one simulated market");
    simulate->add_option("--design", design, "single|multi")->check(CLI::IsMember({"single", "multi"}));
    auto* elasticity_opt = simulate->add_option("--elasticity", sim.elasticity, "high|moderate|low")
                               ->check(CLI::IsMember({"high", "moderate", "low"}));
    simulate->add_option("--b", b, "explicit liquidity parameter")->excludes(elasticity_opt);
    simulate->add_option("--agents", sim.n_agents, "number of agents");
    simulate->add_option("--rounds", sim.rounds, "trading rounds");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--ideas", sim.ideas_path, "ideas CSV (default: synthetic 24-idea corpus)");
    simulate->add_option("--k", sim.k, "top-k settlement");
    simulate->add_option("--out", sim.out_dir, "output directory");
    simulate->add_option("--strategy", strategy, "noisy|longshot|random (all agents)")
        ->check(CLI::IsMember({"noisy", "longshot", "random"}));
    simulate->add_option("--noise-sd", sim.agent.noise_sd, "signal noise sd");
    simulate->add_option("--alpha", sim.agent.distortion_alpha, "Prelec exponent for longshot agents");
    simulate->add_option("--trade-step", sim.agent.trade_step, "max shares per action");

    std::size_t seeds = 20;
    std::string suite_out;
    pm::sim::ExperimentConfig suite_base;
    auto* suite = app.add_subcommand("suite", "Run all six design x elasticity cells");
    suite->add_option("--seeds", seeds, "seeds per cell");
    suite->add_option("--out", suite_out, "output directory")->required();
    suite->add_option("--agents", suite_base.n_agents, "agents per run");
    suite->add_option("--rounds", suite_base.rounds, "rounds per run");
    suite->add_option("--ideas", suite_base.ideas_path, "ideas CSV");
    suite->add_option("--first-seed", suite_base.seed, "first seed");

    std::string log_path;
    auto* replay = app.add_subcommand("replay", "Rebuild state from an event log and print it");
    replay->add_option("eventlog", log_path, "JSON-lines event log")->required();

    std::string config_path;
    auto* serve = app.add_subcommand("serve", "Run the HTTP trading service");
    serve->add_option("--config", config_path, "JSON config file");

    std::string ideas_out;
    auto* ideas = app.add_subcommand("ideas", "Write the synthetic 24-idea corpus as CSV");
    ideas->add_option("--out", ideas_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail({{"error", "usage"}, {"message", e.what()}});
    }

    try {
        if (*simulate) {
            sim.design = pm::parse_design(design);
            sim.b = b;
            sim.agent_mix = {{pm::sim::parse_strategy(strategy), 1.0}};
            const auto result = pm::sim::run_experiment(sim);
            std::cout << result.report.dump(2) << '\n';
        } else if (*suite) {
            const auto result = pm::sim::run_suite(suite_base, seeds, suite_out);
            pm::metrics::write_figure_table(std::cout, result.report);
        } else if (*replay) {
            std::ifstream in(log_path);
            if (!in) return fail({{"error", "Config"}, {"message", "cannot open " + log_path}});
            const auto exchange = pm::Exchange::replay(in);
            std::cout << exchange.snapshot().dump(2) << '\n';
        } else if (*serve) {
            pm::Service service(pm::load_service_config(config_path));
            const int port = service.bind();
            std::cerr << "listening on " << service.config().host << ':' << port << '\n';
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            service.serve();
            g_service = nullptr;
        } else if (*ideas) {
            const auto corpus = pm::synthetic_ideas();
            if (ideas_out.empty()) {
                pm::write_ideas_csv(std::cout, corpus);
            } else {
                std::ofstream out(ideas_out);
                pm::write_ideas_csv(out, corpus);
            }
        }
    } catch (const pm::sim::ConfigError& e) {
        json issues = json::array();
        for (const auto& i : e.issues()) issues.push_back({{"field", i.field}, {"message", i.message}});
        return fail({{"error", "Config"}, {"message", e.what()}, {"issues", issues}});
    } catch (const pm::ReplayError& e) {
        return fail({{"error", pm::to_string(e.code())}, {"seq", e.seq()}, {"line", e.line()}, {"message", e.what()}});
    } catch (const pm::MarketError& e) {
        return fail({{"error", pm::to_string(e.code())}, {"message", e.what()}});
    } catch (const std::exception& e) {
        return fail({{"error", "internal"}, {"message", e.what()}});
    }
    return 0;
}
