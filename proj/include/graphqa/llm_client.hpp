#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphqa {

struct GenerationParams {
    double temperature = 0.2;
    double repeat_penalty = 1.2;
    int num_ctx = 8192;
    int num_predict = 2048;  // -1 means unlimited
    double timeout_s = 120.0;
    std::string model;

    static GenerationParams case_a_c(std::string model, double timeout_s = 120.0);
    static GenerationParams case_b(std::string model, double timeout_s = 120.0);
};

struct PromptParts {
    std::string system;
    std::string context;  // empty behaves as absent
    std::string user;
};

// Where retrieved context lands in the rendered prompt. The default keeps it
// at the head of the user turn; BeforeSystem places it before the whole
// system block instead.
enum class ContextPlacement { UserTurn, BeforeSystem };

// Renders the raw channel-based template byte-exactly:
//   <|start|>system<|message|>{system}<|end|>\n
//   <|start|>user<|message|>{user}<|end|>\n
//   <|start|>assistant<|channel|>final<|message|>
// With context present, the user slot is "{context}\n\n{user}". Inputs
// containing the delimiter "<|" are rejected, as is an empty user part.
std::string render_prompt(const PromptParts& parts,
                          ContextPlacement placement = ContextPlacement::UserTurn);

enum class LlmErrorKind { Connection, HttpStatus, Timeout, EmptyResponse, Protocol };

struct LlmError : std::runtime_error {
    LlmError(LlmErrorKind kind, const std::string& message, int http_status = 0)
        : std::runtime_error(message), kind(kind), http_status(http_status) {}
    LlmErrorKind kind;
    int http_status;
};

std::string_view to_string(LlmErrorKind kind);

struct GenerateRequest {
    std::string prompt;
    GenerationParams params;
};

struct GenerateResult {
    std::string text;
    double latency_s = 0.0;
};

// JSON body of the raw generate call; byte-stable for identical inputs.
std::string build_request_body(const GenerateRequest& req);

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    // Returns the generated text or throws LlmError.
    virtual std::string run(const GenerateRequest& req) = 0;
    virtual bool reachable(double timeout_s) = 0;
};

// Wall-clock timing around the full request.
GenerateResult generate(LlmBackend& backend, const std::string& prompt,
                        const GenerationParams& params);

struct RetryPolicy {
    int max_attempts = 3;
    std::function<void(int attempt)> backoff;  // optional inter-attempt hook
};

// Timeouts degrade num_predict on the next attempt (halved, floored at 1024;
// unlimited degrades to 2048 first); connection and protocol failures retry
// with unchanged parameters. The last error surfaces when attempts run out.
// attempts_out, when set, receives the number of calls made.
GenerateResult generate_with_retry(LlmBackend& backend, const std::string& prompt,
                                   GenerationParams params,
                                   const RetryPolicy& policy = {},
                                   int* attempts_out = nullptr);

// POST {base_url}/api/generate speaking the raw generate protocol.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(std::string base_url) : base_url_(std::move(base_url)) {}
    std::string run(const GenerateRequest& req) override;
    bool reachable(double timeout_s) override;
    const std::string& base_url() const { return base_url_; }

private:
    std::string base_url_;
};

// Deterministic in-process backend. Responses come from, in priority order:
// a scripted outcome queue, an exact prompt map, then the default handler.
// A configured delay exceeding the request timeout simulates a read timeout
// without sleeping. All calls are recorded for assertions.
class MockBackend : public LlmBackend {
public:
    struct Outcome {
        enum class Kind { Success, Timeout, Connection, Http, Empty } kind =
            Kind::Success;
        std::string text;
        int http_status = 500;
    };

    using Handler = std::function<std::string(const GenerateRequest&)>;

    MockBackend() = default;
    explicit MockBackend(Handler default_handler)
        : default_handler_(std::move(default_handler)) {}

    std::string run(const GenerateRequest& req) override;
    bool reachable(double /*timeout_s*/) override { return reachable_; }

    void set_response(const std::string& prompt, std::string text);
    void set_default_handler(Handler handler);
    // Outcomes consumed FIFO by calls whose prompt matches (empty prompt key
    // scripts every call).
    void push_outcome(const std::string& prompt, Outcome outcome);
    void set_delay_s(double delay_s) { delay_s_ = delay_s; }
    void set_reachable(bool reachable) { reachable_ = reachable; }

    std::vector<GenerateRequest> requests() const;
    std::size_t call_count() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::string> responses_;
    std::map<std::string, std::vector<Outcome>> scripted_;
    Handler default_handler_;
    double delay_s_ = 0.0;
    bool reachable_ = true;
    std::vector<GenerateRequest> log_;
};

// Deterministic FNV-1a 64-bit hash used by the mock handlers.
std::uint64_t fnv1a64(std::string_view s);

// Backend factory. URLs with the mock scheme return in-process mocks:
//   mock://answer  deterministic prose answers (also plain "mock://")
//   mock://qa      three-pair JSON arrays for datagen runs
//   mock://judge   rubric verdict lines carrying a 0-3 digit
// Anything else is treated as an HTTP base URL.
std::unique_ptr<LlmBackend> make_backend(const std::string& url);

// LLM_BASE_URL, default http://localhost:11434.
std::string llm_base_url_from_env();

}  // namespace graphqa
