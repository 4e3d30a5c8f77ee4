#pragma once

#include <memory>
#include <string>
#include <thread>

#include "graphqa/graph.hpp"
#include "graphqa/llm_client.hpp"
#include "graphqa/retrieval.hpp"

namespace httplib {
class Server;
}

namespace graphqa {

struct ServiceConfig {
    std::string host = "localhost";
    int port = 8080;  // 0 binds an ephemeral port
    std::string model_plain;
    std::string model_ft;
    std::string system_prompt;
    RetrievalConfig retrieval;
    double timeout_s = 120.0;
    ContextPlacement placement = ContextPlacement::UserTurn;

    // BIND_ADDR (host:port), MODEL_PLAIN, MODEL_FT plus the retrieval
    // variables; LLM_BASE_URL is resolved by the caller into a backend.
    static ServiceConfig from_env();
};

// Thin HTTP adapter over the query pipeline:
//   POST /query/plain    {question, model?} -> {answer, model, latency_s}
//   POST /query/graphrag {question}         -> {answer, context, records,
//                                              retried, latency_s}
//   GET  /health                            -> {status, graph_loaded,
//                                              backend_reachable}
// Errors: 400 bad request, 502 backend failure, 504 backend timeout,
// 503 graphrag without a loaded graph.
class Service {
public:
    Service(ServiceConfig cfg, std::shared_ptr<LlmBackend> backend,
            std::shared_ptr<const KnowledgeGraph> graph);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    void stop();
    int port() const { return port_; }

private:
    void install_routes();

    ServiceConfig cfg_;
    std::shared_ptr<LlmBackend> backend_;
    std::shared_ptr<const KnowledgeGraph> graph_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace graphqa
