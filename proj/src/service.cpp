#include "graphqa/service.hpp"

#include <chrono>
#include <cstdlib>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "graphqa/prompts.hpp"
#include "graphqa/text.hpp"

namespace graphqa {

using nlohmann::json;

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig cfg;
    if (const char* v = std::getenv("BIND_ADDR")) {
        const std::string addr = v;
        const auto colon = addr.rfind(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("BIND_ADDR must be host:port");
        }
        cfg.host = addr.substr(0, colon);
        cfg.port = std::stoi(addr.substr(colon + 1));
    }
    if (const char* v = std::getenv("MODEL_PLAIN")) cfg.model_plain = v;
    if (const char* v = std::getenv("MODEL_FT")) cfg.model_ft = v;
    cfg.retrieval = RetrievalConfig::from_env();
    cfg.system_prompt = std::string(kDefaultSystemPrompt);
    return cfg;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_llm_error(httplib::Response& res, const LlmError& e) {
    const int status = e.kind == LlmErrorKind::Timeout ? 504 : 502;
    send_json(res, status,
              json{{"error", e.what()}, {"kind", std::string(to_string(e.kind))}});
}

// Extracts a non-empty "question" field or answers 400.
bool parse_question(const httplib::Request& req, httplib::Response& res,
                    json& body, std::string& question) {
    body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        send_json(res, 400, json{{"error", "body must be a JSON object"}});
        return false;
    }
    if (!body.contains("question") || !body["question"].is_string() ||
        body["question"].get<std::string>().empty()) {
        send_json(res, 400, json{{"error", "missing or empty 'question'"}});
        return false;
    }
    question = body["question"].get<std::string>();
    return true;
}

}  // namespace

Service::Service(ServiceConfig cfg, std::shared_ptr<LlmBackend> backend,
                 std::shared_ptr<const KnowledgeGraph> graph)
    : cfg_(std::move(cfg)),
      backend_(std::move(backend)),
      graph_(std::move(graph)),
      server_(std::make_unique<httplib::Server>()) {
    if (!backend_) throw std::invalid_argument("service requires a backend");
    if (cfg_.model_plain.empty() && cfg_.model_ft.empty()) {
        throw std::invalid_argument("service requires at least one configured model");
    }
    if (cfg_.port < 0 || cfg_.port > 65535) {
        throw std::invalid_argument("invalid port " + std::to_string(cfg_.port));
    }
    install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
    server_->Post("/query/plain", [this](const httplib::Request& req,
                                         httplib::Response& res) {
        json body;
        std::string question;
        if (!parse_question(req, res, body, question)) return;

        std::string model = cfg_.model_plain.empty() ? cfg_.model_ft : cfg_.model_plain;
        if (body.contains("model") && body["model"].is_string() &&
            !body["model"].get<std::string>().empty()) {
            model = body["model"].get<std::string>();
        }
        const GenerationParams params =
            !cfg_.model_ft.empty() && model == cfg_.model_ft
                ? GenerationParams::case_b(model, cfg_.timeout_s)
                : GenerationParams::case_a_c(model, cfg_.timeout_s);

        try {
            const std::string prompt = render_prompt(
                PromptParts{cfg_.system_prompt, "", question}, cfg_.placement);
            const GenerateResult out = generate(*backend_, prompt, params);
            send_json(res, 200,
                      json{{"answer", out.text},
                           {"model", model},
                           {"latency_s", out.latency_s}});
        } catch (const LlmError& e) {
            send_llm_error(res, e);
        } catch (const std::exception& e) {
            send_json(res, 400, json{{"error", e.what()}});
        }
    });

    server_->Post("/query/graphrag", [this](const httplib::Request& req,
                                            httplib::Response& res) {
        json body;
        std::string question;
        if (!parse_question(req, res, body, question)) return;
        if (!graph_) {
            send_json(res, 503, json{{"error", "graph not loaded"}});
            return;
        }

        try {
            const auto start = std::chrono::steady_clock::now();
            const RankedContext ctx = retrieve(question, *graph_, cfg_.retrieval);
            const std::string prompt = render_prompt(
                PromptParts{cfg_.system_prompt, ctx.text, question}, cfg_.placement);
            const std::string model =
                cfg_.model_plain.empty() ? cfg_.model_ft : cfg_.model_plain;
            const GenerateResult out = generate(
                *backend_, prompt, GenerationParams::case_a_c(model, cfg_.timeout_s));
            const double latency =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();

            json records = json::array();
            for (const auto& r : ctx.records) {
                records.push_back({{"node_ids", r.node_ids},
                                   {"final_score", r.final_score},
                                   {"query_kind", std::string(to_string(r.query_kind))}});
            }
            send_json(res, 200,
                      json{{"answer", out.text},
                           {"context", ctx.text},
                           {"records", records},
                           {"retried", ctx.retried},
                           {"latency_s", latency}});
        } catch (const LlmError& e) {
            send_llm_error(res, e);
        } catch (const std::exception& e) {
            send_json(res, 400, json{{"error", e.what()}});
        }
    });

    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        // The reachability probe is capped at one second.
        send_json(res, 200,
                  json{{"status", "ok"},
                       {"graph_loaded", graph_ != nullptr},
                       {"backend_reachable", backend_->reachable(1.0)}});
    });
}

int Service::start() {
    if (thread_.joinable()) throw std::logic_error("service already started");

    if (cfg_.port == 0) {
        port_ = server_->bind_to_any_port(cfg_.host);
        if (port_ <= 0) throw std::runtime_error("cannot bind to an ephemeral port");
    } else {
        if (!server_->bind_to_port(cfg_.host, cfg_.port)) {
            throw std::runtime_error("cannot bind " + cfg_.host + ":" +
                                     std::to_string(cfg_.port));
        }
        port_ = cfg_.port;
    }

    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace graphqa
