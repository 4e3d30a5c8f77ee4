#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphqa/datagen.hpp"
#include "graphqa/graph.hpp"
#include "graphqa/llm_client.hpp"
#include "graphqa/retrieval.hpp"

namespace graphqa {

inline constexpr std::array<std::string_view, 8> kCategories = {
    "Survey",   "Planning", "Design", "MaintRiver",
    "MaintDam", "MaintSabo", "Hazard", "CrossDomain",
};

bool is_valid_category(std::string_view category);

struct TestQuestion {
    std::string id;
    std::string category;
    std::string text;
};

// Newline-delimited JSON {id, category, question}; categories are a closed
// set and ids must be unique.
std::vector<TestQuestion> load_questions(const std::string& path);

enum class CaseLabel { A, B, C };
std::string_view to_string(CaseLabel c);
std::optional<CaseLabel> parse_case_label(std::string_view s);

struct JudgeVerdict {
    int score = 0;  // 0..3
    std::string raw_response;
};

struct EvalRecord {
    std::string question_id;
    std::string category;
    CaseLabel case_label = CaseLabel::A;
    std::string answer;
    std::size_t answer_chars = 0;  // code points
    double latency_s = 0.0;
    std::optional<JudgeVerdict> verdict;
    std::optional<std::string> context_used;  // Case C only
    std::string error;  // non-empty marks a failed row
};

std::string eval_record_to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const std::string& line);
std::vector<EvalRecord> read_eval_jsonl(const std::string& path);

// A test question is excluded iff some training question reaches the
// threshold (>=, unlike the strict < kept by datagen dedup).
struct LeakageExclusion {
    TestQuestion question;
    std::string offender;  // the too-similar training question
    double similarity = 0.0;
};
struct LeakageResult {
    std::vector<TestQuestion> kept;
    std::vector<LeakageExclusion> excluded;
};
LeakageResult leakage_filter(const std::vector<TestQuestion>& test,
                             const TrainingSet& train, double threshold = 0.45);

struct EvalClients {
    LlmBackend* answer_backend = nullptr;
    LlmBackend* judge_backend = nullptr;
    std::string model_plain;
    std::string model_ft;
    std::string judge_model;
    std::string system_prompt;
    double timeout_s = 120.0;
    ContextPlacement placement = ContextPlacement::UserTurn;
};

// Produces the unjudged record for one case. Case A uses the plain model
// with the case_a_c preset, Case B the fine-tuned model with the case_b
// preset, Case C retrieves first and prepends the context (latency covers
// retrieval plus generation). Backend errors propagate.
EvalRecord answer_case(const TestQuestion& q, CaseLabel c, const KnowledgeGraph* graph,
                       const EvalClients& clients, const RetrievalConfig& cfg);

// First standalone digit 0-3 in the response (not adjacent to another digit).
std::optional<int> parse_judge_score(const std::string& raw);

// One re-ask on parse failure; throws when both responses are digit-free.
JudgeVerdict judge(const std::string& question, const std::string& answer,
                   LlmBackend& judge_backend, const std::string& judge_model,
                   double timeout_s = 120.0);

struct RunOptions {
    std::vector<CaseLabel> cases{CaseLabel::A, CaseLabel::C};
    bool resume = false;
    int workers = 1;
    std::size_t max_records = 0;  // 0 = unlimited; testing/smoke knob
};

struct RunSummary {
    std::size_t written = 0;
    std::size_t skipped = 0;  // already present (resume)
    std::size_t failed = 0;   // failed rows among the written ones
};

// Streams one JSONL line per (question, case) pair immediately after judging;
// restartable: pairs already present in out_path are skipped, and a torn
// trailing line from a crash is truncated before appending. Per-record
// failures become failed rows, never abort the run.
RunSummary run_benchmark(const std::vector<TestQuestion>& questions,
                         const RunOptions& options, const KnowledgeGraph* graph,
                         const EvalClients& clients, const RetrievalConfig& cfg,
                         const std::string& out_path);

}  // namespace graphqa
