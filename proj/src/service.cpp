#include "pm/service.hpp"

#include "pm/errors.hpp"

// 100+ clients may connect at once; the library default backlog is 5.
#define CPPHTTPLIB_LISTEN_BACKLOG 256
#include <httplib.h>

#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <unordered_map>

namespace pm {

using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

namespace {

double parse_b(const std::string& text, const std::string& source) {
    try {
        std::size_t used = 0;
        const double b = std::stod(text, &used);
        if (used == text.size() && b > 0.0) return b;
    } catch (const std::exception&) {
    }
    throw MarketError(ErrorCode::Config, source + ": b must be a positive number");
}

int parse_int(const std::string& text, const std::string& source) {
    int value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size()) {
        throw MarketError(ErrorCode::Config, source + ": expected an integer, got '" + text + "'");
    }
    return value;
}

double preset_b(const std::string& name, const std::string& source) {
    if (auto p = find_preset(name)) return p->b;
    throw MarketError(ErrorCode::Config, source + ": elasticity must be high, moderate or low");
}

}  // namespace

ServiceConfig load_service_config(const std::string& path, const EnvLookup& env) {
    ServiceConfig c;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw MarketError(ErrorCode::Config, "cannot open config file '" + path + "'");
        json j;
        try {
            j = json::parse(in);
            c.host = j.value("host", c.host);
            c.port = j.value("port", c.port);
            c.admin_token = j.value("admin_token", c.admin_token);
            c.venue_id = j.value("venue_id", c.venue_id);
            c.ideas_path = j.value("ideas", c.ideas_path);
            if (j.contains("design")) c.design = parse_design(j.at("design").get<std::string>());
            if (j.contains("elasticity")) c.b = preset_b(j.at("elasticity").get<std::string>(), path);
            if (j.contains("b")) c.b = j.at("b").get<double>();
            c.codes_path = j.value("codes", c.codes_path);
            c.event_log = j.value("event_log", c.event_log);
            c.threads = j.value("threads", c.threads);
        } catch (const json::exception& e) {
            throw MarketError(ErrorCode::Config, path + ": " + e.what());
        }
    }
    auto get = [&](const char* name) { return env ? env(name) : std::nullopt; };
    if (auto v = get("PM_HOST")) c.host = *v;
    if (auto v = get("PM_PORT")) c.port = parse_int(*v, "PM_PORT");
    if (auto v = get("PM_ADMIN_TOKEN")) c.admin_token = *v;
    if (auto v = get("PM_VENUE_ID")) c.venue_id = *v;
    if (auto v = get("PM_IDEAS")) c.ideas_path = *v;
    if (auto v = get("PM_DESIGN")) c.design = parse_design(*v);
    if (auto v = get("PM_ELASTICITY")) c.b = preset_b(*v, "PM_ELASTICITY");
    if (auto v = get("PM_B")) c.b = parse_b(*v, "PM_B");
    if (auto v = get("PM_CODES")) c.codes_path = *v;
    if (auto v = get("PM_EVENT_LOG")) c.event_log = *v;
    if (auto v = get("PM_THREADS")) c.threads = parse_int(*v, "PM_THREADS");
    if (c.port < 0 || c.port > 65535) throw MarketError(ErrorCode::Config, "port out of range");
    if (!(c.b > 0.0)) throw MarketError(ErrorCode::Config, "b must be > 0");
    if (c.threads < 1) c.threads = 1;
    return c;
}

std::string_view faq_markdown() noexcept {
    return R"(# How this market works

**What am I trading?** Each idea has a contract. Prices run from 0 to 1 and
read as the market's estimate that the idea ends up among the best five
ideas as judged by the expert panel.

**Single market.** One contract per idea. All ideas share one market maker,
so every trade moves every price, and prices across all ideas sum to 1.

**Multi market.** Each idea has a Top contract ("this idea is among the best
five") and a Flop contract ("it is not"). A trade only moves that idea's
Top/Flop pair, and the two prices always sum to 1.

**Costs.** The automated market maker always quotes a price, so you never
wait for a counterparty. Buying pushes a price up, selling pushes it down.
You can only sell shares you hold.

**Payoff.** At the end, every contract whose claim turned out true pays 100
currency units per share; all others pay 0. You start with 5,000 units.

**Portfolio value.** Cash plus each holding valued at price x 100.
)";
}

namespace {

struct HttpError {
    int status;
    json body;
};

HttpError http_error(const MarketError& e) {
    int status = 400;
    switch (e.code()) {
        case ErrorCode::UnknownVenue: status = 404; break;
        case ErrorCode::UnknownTrader: status = 401; break;
        case ErrorCode::InsufficientCash:
        case ErrorCode::InsufficientHoldings:
        case ErrorCode::DuplicateId: status = 409; break;
        case ErrorCode::VenueSettled: status = 410; break;
        case ErrorCode::UnknownContract:
        case ErrorCode::DegenerateOrder:
        case ErrorCode::InvalidArgument:
        case ErrorCode::TruthMismatch: status = 422; break;
        default: status = 500; break;
    }
    json body{{"error", to_string(e.code())}, {"message", e.what()}};
    if (const auto& s = e.shortfall()) {
        if (e.code() == ErrorCode::InsufficientCash) {
            body["required"] = format_decimal4(s->required);
            body["available"] = format_decimal4(s->available);
        } else {
            body["required"] = static_cast<std::int64_t>(s->required);
            body["available"] = static_cast<std::int64_t>(s->available);
        }
    }
    return {status, std::move(body)};
}

json wire_price(const ContractPrice& p) {
    return {{"idea_id", p.idea_id}, {"side", to_string(p.side)}, {"price", format_decimal4(p.price)}};
}

json wire_prices(const std::vector<ContractPrice>& prices) {
    json out = json::array();
    for (const auto& p : prices) out.push_back(wire_price(p));
    return out;
}

std::string new_token() {
    std::random_device rd;
    std::array<std::uint32_t, 4> words{};
    for (auto& w : words) w = rd();
    static constexpr char hex[] = "0123456789abcdef";
    std::string token;
    for (std::uint32_t w : words) {
        for (int shift = 28; shift >= 0; shift -= 4) token += hex[(w >> shift) & 0xF];
    }
    return token;
}

Order parse_order_body(const json& body, const std::string& trader_id) {
    Order order;
    order.trader_id = trader_id;
    order.contract.idea_id = body.at("idea_id").get<std::string>();
    order.contract.side = parse_side(body.value("side", "idea"));
    order.direction = parse_direction(body.at("direction").get<std::string>());
    const auto& qty = body.at("qty");
    if (!qty.is_number_integer()) throw MarketError(ErrorCode::InvalidArgument, "qty must be an integer");
    order.quantity = qty.get<std::int64_t>();
    return order;
}

}  // namespace

struct Service::Impl {
    struct Session {
        std::string token;
        std::string trader_id;
        std::string venue_id;
        std::int64_t issued = 0;
    };

    ServiceConfig config;
    Exchange exchange;
    std::ofstream log_file;
    httplib::Server server;

    std::mutex auth_mutex;
    std::unordered_map<std::string, std::string> codes;  // code -> venue
    std::unordered_map<std::string, Session> sessions;   // token -> session
    std::unordered_map<std::string, std::string> trader_token;
    std::int64_t next_trader = 0;

    explicit Impl(ServiceConfig cfg) : config(std::move(cfg)) {}

    void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class Fn>
    void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const MarketError& e) {
            const auto err = http_error(e);
            send(res, err.status, err.body);
        } catch (const json::exception& e) {
            send(res, 422, {{"error", "MalformedRequest"}, {"message", e.what()}});
        }
    }

    bool is_admin(const httplib::Request& req) {
        return !config.admin_token.empty() && req.get_header_value("X-Admin-Token") == config.admin_token;
    }

    std::optional<Session> session_of(const httplib::Request& req) {
        const auto auth = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (auth.rfind(prefix, 0) != 0) return std::nullopt;
        std::lock_guard lock(auth_mutex);
        auto it = sessions.find(auth.substr(prefix.size()));
        if (it == sessions.end()) return std::nullopt;
        return it->second;
    }

    void load_codes(const std::string& path, const std::string& default_venue) {
        std::ifstream in(path);
        if (!in) throw MarketError(ErrorCode::Config, "cannot open activation code file '" + path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) {
                codes[line] = default_venue;
            } else {
                codes[line.substr(0, comma)] = line.substr(comma + 1);
            }
        }
    }

    void routes();
};

void Service::Impl::routes() {
    server.Post("/register", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = json::parse(req.body);
            const auto code = body.at("activation_code").get<std::string>();
            Session session;
            {
                std::lock_guard lock(auth_mutex);
                auto it = codes.find(code);
                if (it == codes.end()) {
                    send(res, 403, {{"error", "Forbidden"}, {"message", "unknown or used activation code"}});
                    return;
                }
                char id[32];
                std::snprintf(id, sizeof id, "trader-%04lld", static_cast<long long>(++next_trader));
                session = {new_token(), id, it->second, system_clock_ms()};
                exchange.create_account(session.venue_id, session.trader_id);
                codes.erase(it);
                sessions[session.token] = session;
                trader_token[session.trader_id] = session.token;
            }
            send(res, 200, {{"token", session.token},
                            {"trader_id", session.trader_id},
                            {"venue_id", session.venue_id},
                            {"cash", kDefaultEndowment.str()}});
        });
    });

    server.Get("/venues", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            json out = json::array();
            for (const auto& id : exchange.venue_ids()) {
                out.push_back(exchange.read(id, [&](const Venue& v, const Ledger& l) {
                    return json{{"venue_id", id},
                                {"design", to_string(v.design())},
                                {"b", v.liquidity()},
                                {"status", v.settled() ? "settled" : "open"},
                                {"ideas", v.ideas().size()},
                                {"seq", l.last_seq()}};
                }));
            }
            send(res, 200, out);
        });
    });

    server.Get("/venues/:id/ideas", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto& id = req.path_params.at("id");
            send(res, 200, exchange.read(id, [&](const Venue& v, const Ledger& l) {
                std::map<std::string, json> prices;
                for (const auto& p : v.price_snapshot()) prices[p.idea_id][std::string(to_string(p.side))] = format_decimal4(p.price);
                json ideas = json::array();
                for (const auto& idea : v.ideas()) {
                    ideas.push_back({{"idea_id", idea.idea_id},
                                     {"title", idea.title},
                                     {"description", idea.description},
                                     {"prices", prices[idea.idea_id]}});
                }
                return json{{"seq", l.last_seq()}, {"design", to_string(v.design())}, {"ideas", std::move(ideas)}};
            }));
        });
    });

    server.Get("/venues/:id/prices", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto& id = req.path_params.at("id");
            send(res, 200, exchange.read(id, [&](const Venue& v, const Ledger& l) {
                return json{{"seq", l.last_seq()}, {"prices", wire_prices(v.price_snapshot())}};
            }));
        });
    });

    server.Post("/venues/:id/quote", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto& id = req.path_params.at("id");
            const Order order = parse_order_body(json::parse(req.body), "");
            const Quote q = exchange.quote(id, order.contract, order.direction, order.quantity);
            send(res, 200, {{"cash_delta", q.charge.str()}, {"prices_after", wire_prices(q.prices_after)}});
        });
    });

    server.Post("/orders", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto session = session_of(req);
            if (!session) {
                send(res, 401, {{"error", "Unauthorized"}, {"message", "missing or invalid session token"}});
                return;
            }
            const Order order = parse_order_body(json::parse(req.body), session->trader_id);
            const Fill fill = exchange.execute(session->venue_id, order);
            send(res, 200, {{"seq", fill.event.seq},
                            {"cash_delta", fill.event.cash_delta.str()},
                            {"new_cash", fill.new_cash.str()},
                            {"prices_after", wire_prices(fill.event.prices_after)}});
        });
    });

    server.Get("/portfolio", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto session = session_of(req);
            if (!session) {
                send(res, 401, {{"error", "Unauthorized"}, {"message", "missing or invalid session token"}});
                return;
            }
            send(res, 200, exchange.read(session->venue_id, [&](const Venue& v, const Ledger& l) {
                const Account& a = l.account(session->trader_id);
                json holdings = json::array();
                for (const auto& [contract, qty] : a.holdings) {
                    holdings.push_back({{"idea_id", contract.idea_id},
                                        {"side", to_string(contract.side)},
                                        {"qty", qty},
                                        {"price", format_decimal4(v.price(contract))}});
                }
                json series = json::array();
                for (const auto& point : a.value_series) {
                    series.push_back({{"seq", point.seq}, {"value", format_decimal4(point.value)}});
                }
                return json{{"trader_id", a.trader_id},
                            {"venue_id", v.id()},
                            {"cash", a.cash.str()},
                            {"holdings", std::move(holdings)},
                            {"transaction_count", a.transaction_count},
                            {"value", format_decimal4(v.portfolio_value(a))},
                            {"value_series", std::move(series)},
                            {"seq", l.last_seq()}};
            }));
        });
    });

    server.Get("/faq", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(faq_markdown()), "text/markdown");
    });

    server.Get("/venues/:id/stream", [this](const httplib::Request& req, httplib::Response& res) {
        const auto id = req.path_params.at("id");
        if (!exchange.has_venue(id)) {
            send(res, 404, {{"error", "UnknownVenue"}, {"message", "unknown venue '" + id + "'"}});
            return;
        }
        std::int64_t from = 0;
        if (req.has_param("from_seq")) from = std::max<std::int64_t>(0, std::atoll(req.get_param_value("from_seq").c_str()));
        auto cursor = std::make_shared<std::int64_t>(from);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
            const auto events = exchange.trades_since(id, *cursor);
            if (!events.empty()) {
                for (const auto& e : events) {
                    const json msg{{"seq", e.seq}, {"changed_contracts", wire_prices(e.prices_after)}};
                    const std::string frame = "id: " + std::to_string(e.seq) + "\nevent: prices\ndata: " + msg.dump() + "\n\n";
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *cursor = e.seq;
                }
                return true;
            }
            const auto settled = exchange.read(id, [](const Venue& v, const Ledger& l) {
                return v.settled() ? std::optional<json>(json{{"seq", l.last_seq()}, {"settled", true},
                                                              {"top_k", v.settlement()->top_k}})
                                   : std::nullopt;
            });
            if (settled && *cursor >= (*settled)["seq"].get<std::int64_t>()) {
                const std::string frame = "event: settled\ndata: " + settled->dump() + "\n\n";
                sink.write(frame.data(), frame.size());
                sink.done();
                return true;
            }
            if (!exchange.wait_for_update(id, *cursor, std::chrono::milliseconds(500))) {
                static constexpr char keepalive[] = ": keepalive\n\n";
                return sink.write(keepalive, sizeof keepalive - 1);
            }
            return true;
        });
    });

    server.Post("/venues", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!is_admin(req)) {
                send(res, 403, {{"error", "Forbidden"}, {"message", "admin token required"}});
                return;
            }
            const auto body = json::parse(req.body);
            const auto venue_id = body.at("venue_id").get<std::string>();
            const Design design = parse_design(body.at("design").get<std::string>());
            double b = 0.0;
            if (body.contains("b")) {
                b = body.at("b").get<double>();
            } else if (auto p = find_preset(body.value("elasticity", "moderate"))) {
                b = p->b;
            } else {
                throw MarketError(ErrorCode::InvalidArgument, "elasticity must be high, moderate or low");
            }
            std::vector<IdeaContract> ideas;
            if (body.contains("ideas_csv")) {
                ideas = load_ideas_csv(body.at("ideas_csv").get<std::string>());
            } else if (body.contains("ideas")) {
                for (const auto& item : body.at("ideas")) {
                    IdeaContract idea;
                    idea.idea_id = item.at("idea_id").get<std::string>();
                    idea.title = item.value("title", idea.idea_id);
                    idea.description = item.value("description", "");
                    idea.quality_mean = item.value("quality_mean", 3.0);
                    idea.stratum = parse_stratum(item.value("stratum", "medium"));
                    ideas.push_back(std::move(idea));
                }
            } else {
                ideas = synthetic_ideas();
            }
            exchange.open_venue(venue_id, design, std::move(ideas), b);
            if (body.contains("codes")) {
                std::lock_guard lock(auth_mutex);
                for (const auto& code : body.at("codes")) codes[code.get<std::string>()] = venue_id;
            }
            send(res, 201, {{"venue_id", venue_id}, {"design", to_string(design)}, {"b", b}});
        });
    });

    server.Post("/venues/:id/codes", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!is_admin(req)) {
                send(res, 403, {{"error", "Forbidden"}, {"message", "admin token required"}});
                return;
            }
            const auto& id = req.path_params.at("id");
            if (!exchange.has_venue(id)) throw MarketError(ErrorCode::UnknownVenue, "unknown venue '" + id + "'");
            const auto body = json::parse(req.body);
            std::lock_guard lock(auth_mutex);
            std::size_t added = 0;
            for (const auto& code : body.at("codes")) {
                codes[code.get<std::string>()] = id;
                ++added;
            }
            send(res, 200, {{"added", added}});
        });
    });

    server.Post("/venues/:id/settle", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (!is_admin(req)) {
                send(res, 403, {{"error", "Forbidden"}, {"message", "admin token required"}});
                return;
            }
            const auto& id = req.path_params.at("id");
            const auto body = req.body.empty() ? json::object() : json::parse(req.body);
            const std::size_t k = body.value("k", kDefaultTopK);
            const GroundTruth truth = exchange.read(id, [](const Venue& v, const Ledger&) {
                return GroundTruth::from_ideas(v.ideas());
            });
            const Settlement s = exchange.settle(id, truth, k);
            json payouts = json::object();
            for (const auto& [trader, amount] : s.payouts) payouts[trader] = amount.str();
            send(res, 200, {{"venue_id", id}, {"k", s.k}, {"top_k", s.top_k}, {"payouts", payouts}});
        });
    });
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    auto& c = impl_->config;
    if (!c.event_log.empty()) {
        if (std::filesystem::exists(c.event_log) && std::filesystem::file_size(c.event_log) > 0) {
            throw MarketError(ErrorCode::Config, "event log '" + c.event_log + "' already exists; refusing to append");
        }
        impl_->log_file.open(c.event_log, std::ios::out | std::ios::trunc);
        if (!impl_->log_file) throw MarketError(ErrorCode::Config, "cannot write event log '" + c.event_log + "'");
        impl_->exchange.attach_log(&impl_->log_file);
    }
    auto ideas = c.ideas_path.empty() ? synthetic_ideas() : load_ideas_csv(c.ideas_path);
    impl_->exchange.open_venue(c.venue_id, c.design, std::move(ideas), c.b);
    if (!c.codes_path.empty()) impl_->load_codes(c.codes_path, c.venue_id);

    const int threads = c.threads;
    impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
    // Trading clients keep one connection open for a whole session.
    impl_->server.set_keep_alive_max_count(100000);
    impl_->server.set_keep_alive_timeout(30);
    impl_->routes();
}

Service::~Service() { stop(); }

Exchange& Service::exchange() noexcept { return impl_->exchange; }
const ServiceConfig& Service::config() const noexcept { return impl_->config; }

void Service::add_activation_code(const std::string& code, const std::string& venue_id) {
    std::lock_guard lock(impl_->auth_mutex);
    impl_->codes[code] = venue_id;
}

int Service::bind() {
    auto& c = impl_->config;
    if (c.port == 0) {
        c.port = impl_->server.bind_to_any_port(c.host);
    } else if (!impl_->server.bind_to_port(c.host, c.port)) {
        throw MarketError(ErrorCode::Config, "cannot bind " + c.host + ":" + std::to_string(c.port));
    }
    if (c.port <= 0) throw MarketError(ErrorCode::Config, "cannot bind " + c.host);
    return c.port;
}

bool Service::serve() { return impl_->server.listen_after_bind(); }

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace pm
