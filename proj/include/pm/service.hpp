#pragma once

// JSON-over-HTTP facade for human trading.
//
//   POST /register                 {activation_code} -> {token, trader_id, venue_id, cash}
//   GET  /venues                   venue list
//   GET  /venues/{id}/ideas        title, description and current price(s) per idea
//   GET  /venues/{id}/prices       {seq, prices}
//   POST /venues/{id}/quote        {idea_id, side, direction, qty} -> {cash_delta, prices_after}
//   GET  /venues/{id}/stream       server-sent events; ?from_seq=s resumes after seq s
//   POST /orders                   bearer session; {idea_id, side, direction, qty}
//   GET  /portfolio                bearer session
//   GET  /faq                      static markdown
//   POST /venues                   admin: open a venue
//   POST /venues/{id}/codes        admin: add activation codes
//   POST /venues/{id}/settle       admin: settle against the ideas' quality scores
//
// Prices and cash travel as decimal strings with four places.

#include "pm/exchange.hpp"
#include "pm/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pm {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string admin_token;
    std::string venue_id = "main";
    std::string ideas_path;  // empty: synthetic 24-idea corpus
    Design design = Design::Multi;
    double b = 548.0;
    std::string codes_path;  // one code per line, optionally "code,venue_id"
    std::string event_log;   // empty: no persistence
    int threads = 64;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// Defaults, then the JSON config file (if path is non-empty), then PM_*
/// environment variables: PM_HOST, PM_PORT, PM_ADMIN_TOKEN, PM_VENUE_ID,
/// PM_IDEAS, PM_DESIGN, PM_B, PM_ELASTICITY, PM_CODES, PM_EVENT_LOG, PM_THREADS.
/// "elasticity" (a preset name) sets b unless b is also given at the same level.
ServiceConfig load_service_config(const std::string& path, const EnvLookup& env = &process_env);

/// Static FAQ served at /faq.
std::string_view faq_markdown() noexcept;

class Service {
public:
    /// Opens the configured default venue and loads its activation codes.
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    Exchange& exchange() noexcept;
    const ServiceConfig& config() const noexcept;

    void add_activation_code(const std::string& code, const std::string& venue_id);

    /// Binds config().port (0 = any free port) and returns the bound port.
    int bind();
    /// Serves until stop(); call after bind().
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pm
