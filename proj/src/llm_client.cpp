#include "graphqa/llm_client.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace graphqa {

GenerationParams GenerationParams::case_a_c(std::string model, double timeout_s) {
    GenerationParams p;
    p.temperature = 0.2;
    p.repeat_penalty = 1.2;
    p.num_ctx = 8192;
    p.num_predict = 2048;
    p.timeout_s = timeout_s;
    p.model = std::move(model);
    return p;
}

GenerationParams GenerationParams::case_b(std::string model, double timeout_s) {
    GenerationParams p;
    p.temperature = 0.3;
    p.repeat_penalty = 1.1;
    p.num_ctx = 8192;
    p.num_predict = 2048;
    p.timeout_s = timeout_s;
    p.model = std::move(model);
    return p;
}

std::string_view to_string(LlmErrorKind kind) {
    switch (kind) {
        case LlmErrorKind::Connection: return "connection";
        case LlmErrorKind::HttpStatus: return "http_status";
        case LlmErrorKind::Timeout: return "timeout";
        case LlmErrorKind::EmptyResponse: return "empty_response";
        case LlmErrorKind::Protocol: return "protocol";
    }
    return "unknown";
}

std::string render_prompt(const PromptParts& parts, ContextPlacement placement) {
    if (parts.user.empty()) {
        throw std::invalid_argument("prompt user part is empty");
    }
    for (const std::string* s : {&parts.system, &parts.context, &parts.user}) {
        if (s->find("<|") != std::string::npos) {
            throw std::invalid_argument("prompt parts must not contain the delimiter '<|'");
        }
    }

    std::string user_slot = parts.user;
    std::string head;
    if (!parts.context.empty()) {
        if (placement == ContextPlacement::UserTurn) {
            user_slot = parts.context + "\n\n" + parts.user;
        } else {
            head = parts.context + "\n\n";
        }
    }

    std::string out = std::move(head);
    out += "<|start|>system<|message|>";
    out += parts.system;
    out += "<|end|>\n<|start|>user<|message|>";
    out += user_slot;
    out += "<|end|>\n<|start|>assistant<|channel|>final<|message|>";
    return out;
}

std::string build_request_body(const GenerateRequest& req) {
    nlohmann::json body;
    body["model"] = req.params.model;
    body["prompt"] = req.prompt;
    body["raw"] = true;
    body["stream"] = false;
    body["options"] = {
        {"temperature", req.params.temperature},
        {"repeat_penalty", req.params.repeat_penalty},
        {"num_ctx", req.params.num_ctx},
        {"num_predict", req.params.num_predict},
    };
    return body.dump();
}

GenerateResult generate(LlmBackend& backend, const std::string& prompt,
                        const GenerationParams& params) {
    const auto start = std::chrono::steady_clock::now();
    std::string text = backend.run(GenerateRequest{prompt, params});
    const auto end = std::chrono::steady_clock::now();
    double latency = std::chrono::duration<double>(end - start).count();
    if (latency <= 0.0) latency = 1e-9;
    return GenerateResult{std::move(text), latency};
}

GenerateResult generate_with_retry(LlmBackend& backend, const std::string& prompt,
                                   GenerationParams params, const RetryPolicy& policy,
                                   int* attempts_out) {
    if (policy.max_attempts < 1) {
        throw std::invalid_argument("max_attempts must be >= 1");
    }
    for (int attempt = 1;; ++attempt) {
        if (attempts_out) *attempts_out = attempt;
        try {
            return generate(backend, prompt, params);
        } catch (const LlmError& e) {
            if (attempt >= policy.max_attempts) throw;
            if (e.kind == LlmErrorKind::Timeout) {
                if (params.num_predict < 0) {
                    params.num_predict = 2048;
                } else {
                    params.num_predict = std::max(1024, params.num_predict / 2);
                }
            }
            if (policy.backoff) policy.backoff(attempt);
        }
    }
}

std::string HttpBackend::run(const GenerateRequest& req) {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(5, 0);
    const auto whole = static_cast<time_t>(req.params.timeout_s);
    const auto frac =
        static_cast<time_t>((req.params.timeout_s - static_cast<double>(whole)) * 1e6);
    cli.set_read_timeout(whole, frac);
    cli.set_write_timeout(whole, frac);

    const std::string body = build_request_body(req);
    auto res = cli.Post("/api/generate", body, "application/json");
    if (!res) {
        switch (res.error()) {
            case httplib::Error::Read:
                throw LlmError(LlmErrorKind::Timeout,
                               "read timeout after " +
                                   std::to_string(req.params.timeout_s) + "s");
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Connection:
            case httplib::Error::SSLConnection:
                throw LlmError(LlmErrorKind::Connection,
                               "cannot connect to " + base_url_);
            default:
                throw LlmError(LlmErrorKind::Connection,
                               "transport failure talking to " + base_url_ + " (" +
                                   httplib::to_string(res.error()) + ")");
        }
    }
    if (res->status != 200) {
        throw LlmError(LlmErrorKind::HttpStatus,
                       "HTTP " + std::to_string(res->status) + " from " + base_url_,
                       res->status);
    }
    if (res->body.empty()) {
        throw LlmError(LlmErrorKind::EmptyResponse, "empty response body");
    }
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("response") ||
        !parsed["response"].is_string()) {
        throw LlmError(LlmErrorKind::Protocol,
                       "response JSON missing string field 'response'");
    }
    std::string text = parsed["response"].get<std::string>();
    if (text.empty()) {
        throw LlmError(LlmErrorKind::EmptyResponse, "empty 'response' field");
    }
    return text;
}

bool HttpBackend::reachable(double timeout_s) {
    httplib::Client cli(base_url_);
    const auto whole = static_cast<time_t>(timeout_s);
    const auto frac = static_cast<time_t>((timeout_s - static_cast<double>(whole)) * 1e6);
    cli.set_connection_timeout(whole, frac);
    cli.set_read_timeout(whole, frac);
    auto res = cli.Get("/");
    return res && res->status < 500;
}

std::string MockBackend::run(const GenerateRequest& req) {
    std::unique_lock<std::mutex> lock(mu_);
    log_.push_back(req);

    auto take_outcome = [&](const std::string& key, Outcome& out) {
        auto it = scripted_.find(key);
        if (it == scripted_.end() || it->second.empty()) return false;
        out = it->second.front();
        it->second.erase(it->second.begin());
        return true;
    };

    Outcome outcome;
    bool scripted = take_outcome(req.prompt, outcome) || take_outcome("", outcome);
    if (scripted) {
        switch (outcome.kind) {
            case Outcome::Kind::Timeout:
                throw LlmError(LlmErrorKind::Timeout, "scripted timeout");
            case Outcome::Kind::Connection:
                throw LlmError(LlmErrorKind::Connection, "scripted connection failure");
            case Outcome::Kind::Http:
                throw LlmError(LlmErrorKind::HttpStatus,
                               "scripted HTTP " + std::to_string(outcome.http_status),
                               outcome.http_status);
            case Outcome::Kind::Empty:
                throw LlmError(LlmErrorKind::EmptyResponse, "scripted empty response");
            case Outcome::Kind::Success:
                return outcome.text;
        }
    }

    if (delay_s_ > 0.0 && delay_s_ > req.params.timeout_s) {
        throw LlmError(LlmErrorKind::Timeout,
                       "simulated latency " + std::to_string(delay_s_) +
                           "s exceeds timeout " + std::to_string(req.params.timeout_s) +
                           "s");
    }

    auto it = responses_.find(req.prompt);
    if (it != responses_.end()) return it->second;
    if (default_handler_) {
        // Handlers may be arbitrary user code; do not hold the lock.
        Handler handler = default_handler_;
        lock.unlock();
        return handler(req);
    }
    throw LlmError(LlmErrorKind::Protocol, "mock has no response for prompt");
}

void MockBackend::set_response(const std::string& prompt, std::string text) {
    std::lock_guard<std::mutex> lock(mu_);
    responses_[prompt] = std::move(text);
}

void MockBackend::set_default_handler(Handler handler) {
    std::lock_guard<std::mutex> lock(mu_);
    default_handler_ = std::move(handler);
}

void MockBackend::push_outcome(const std::string& prompt, Outcome outcome) {
    std::lock_guard<std::mutex> lock(mu_);
    scripted_[prompt].push_back(std::move(outcome));
}

std::vector<GenerateRequest> MockBackend::requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

std::size_t MockBackend::call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_.size();
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string hex8(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int i = 7; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string mock_answer(const GenerateRequest& req) {
    const std::uint64_t h = fnv1a64(req.params.model + "\x1f" + req.prompt);
    std::string out = "該当する技術基準の規定に基づき、点検頻度・判定基準・措置手順を整理して回答します。";
    for (std::uint64_t i = 0; i < h % 3; ++i) {
        out += "関連する章節の記載内容を踏まえ、対象施設の条件に応じた運用が必要です。";
    }
    out += " [mock-" + hex8(h) + "]";
    return out;
}

std::string mock_qa(const GenerateRequest& req) {
    const std::uint64_t h = fnv1a64(req.prompt);
    const std::string tag = hex8(h);
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 1; i <= 3; ++i) {
        arr.push_back({
            {"question", "確認事項" + tag + "-" + std::to_string(i) +
                             "はどの章節に規定されていますか。"},
            {"answer", "関係する章節に規定があります (参照 " + tag + "-" +
                           std::to_string(i) + ")。"},
        });
    }
    std::string out = arr.dump();
    // Exercise the tolerant extractor: a third of replies carry a trailing
    // citation after the closing bracket.
    if (h % 3 == 0) out += " [Ref-" + tag + "]";
    return out;
}

std::string mock_judge(const GenerateRequest& req) {
    const std::uint64_t h = fnv1a64(req.prompt);
    return "評価: " + std::to_string(h % 4) + " (自動採点)";
}

}  // namespace

std::unique_ptr<LlmBackend> make_backend(const std::string& url) {
    const std::string prefix = "mock://";
    if (url.rfind(prefix, 0) == 0 || url == "mock:") {
        std::string mode = url.rfind(prefix, 0) == 0 ? url.substr(prefix.size()) : "";
        if (mode.empty() || mode == "answer") {
            return std::make_unique<MockBackend>(mock_answer);
        }
        if (mode == "qa") return std::make_unique<MockBackend>(mock_qa);
        if (mode == "judge") return std::make_unique<MockBackend>(mock_judge);
        throw std::invalid_argument("unknown mock backend mode '" + mode + "'");
    }
    return std::make_unique<HttpBackend>(url);
}

std::string llm_base_url_from_env() {
    if (const char* v = std::getenv("LLM_BASE_URL")) return v;
    return "http://localhost:11434";
}

}  // namespace graphqa
