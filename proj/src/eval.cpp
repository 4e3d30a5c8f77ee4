#include "graphqa/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "graphqa/prompts.hpp"
#include "graphqa/text.hpp"

namespace graphqa {

bool is_valid_category(std::string_view category) {
    for (auto c : kCategories) {
        if (c == category) return true;
    }
    return false;
}

std::vector<TestQuestion> load_questions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<TestQuestion> out;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": invalid JSON line");
        }
        TestQuestion q;
        q.id = j.at("id").get<std::string>();
        q.category = j.at("category").get<std::string>();
        q.text = j.at("question").get<std::string>();
        if (!is_valid_category(q.category)) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown category '" + q.category + "'");
        }
        if (!ids.insert(q.id).second) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate question id '" + q.id + "'");
        }
        if (q.text.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": empty question");
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::string_view to_string(CaseLabel c) {
    switch (c) {
        case CaseLabel::A: return "A";
        case CaseLabel::B: return "B";
        case CaseLabel::C: return "C";
    }
    return "?";
}

std::optional<CaseLabel> parse_case_label(std::string_view s) {
    if (s == "A") return CaseLabel::A;
    if (s == "B") return CaseLabel::B;
    if (s == "C") return CaseLabel::C;
    return std::nullopt;
}

std::string eval_record_to_json(const EvalRecord& r) {
    nlohmann::json j;
    j["question_id"] = r.question_id;
    j["category"] = r.category;
    j["case"] = std::string(to_string(r.case_label));
    if (!r.error.empty()) {
        j["error"] = r.error;
        return j.dump();
    }
    j["answer"] = r.answer;
    j["answer_chars"] = r.answer_chars;
    j["latency_s"] = r.latency_s;
    if (r.verdict) {
        j["score"] = r.verdict->score;
        j["judge_raw"] = r.verdict->raw_response;
    }
    if (r.context_used) j["context_used"] = *r.context_used;
    return j.dump();
}

EvalRecord eval_record_from_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    EvalRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.category = j.value("category", std::string{});
    const auto c = parse_case_label(j.at("case").get<std::string>());
    if (!c) throw std::runtime_error("unknown case label in record");
    r.case_label = *c;
    if (j.contains("error")) {
        r.error = j["error"].get<std::string>();
        return r;
    }
    r.answer = j.value("answer", std::string{});
    r.answer_chars = j.value("answer_chars", std::size_t{0});
    r.latency_s = j.value("latency_s", 0.0);
    if (j.contains("score")) {
        r.verdict = JudgeVerdict{j["score"].get<int>(),
                                 j.value("judge_raw", std::string{})};
    }
    if (j.contains("context_used")) {
        r.context_used = j["context_used"].get<std::string>();
    }
    return r;
}

std::vector<EvalRecord> read_eval_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<EvalRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(eval_record_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return out;
}

LeakageResult leakage_filter(const std::vector<TestQuestion>& test,
                             const TrainingSet& train, double threshold) {
    std::vector<BigramProfile> train_profiles;
    train_profiles.reserve(train.pairs.size());
    for (const auto& p : train.pairs) {
        train_profiles.push_back(BigramProfile::of(p.question));
    }

    LeakageResult out;
    for (const auto& q : test) {
        const BigramProfile profile = BigramProfile::of(q.text);
        bool leaked = false;
        for (std::size_t i = 0; i < train_profiles.size(); ++i) {
            const double j = bigram_jaccard(profile, train_profiles[i]);
            if (j >= threshold) {
                out.excluded.push_back(
                    LeakageExclusion{q, train.pairs[i].question, j});
                leaked = true;
                break;
            }
        }
        if (!leaked) out.kept.push_back(q);
    }
    return out;
}

EvalRecord answer_case(const TestQuestion& q, CaseLabel c, const KnowledgeGraph* graph,
                       const EvalClients& clients, const RetrievalConfig& cfg) {
    if (!clients.answer_backend) {
        throw std::invalid_argument("answer backend not configured");
    }

    EvalRecord r;
    r.question_id = q.id;
    r.category = q.category;
    r.case_label = c;

    PromptParts parts;
    parts.system = clients.system_prompt;
    parts.user = q.text;

    GenerationParams params;
    switch (c) {
        case CaseLabel::A:
            params = GenerationParams::case_a_c(clients.model_plain, clients.timeout_s);
            break;
        case CaseLabel::B:
            params = GenerationParams::case_b(clients.model_ft, clients.timeout_s);
            break;
        case CaseLabel::C: {
            if (!graph) throw std::invalid_argument("Case C requires a loaded graph");
            params = GenerationParams::case_a_c(clients.model_plain, clients.timeout_s);
            const auto start = std::chrono::steady_clock::now();
            const RankedContext ctx = retrieve(q.text, *graph, cfg);
            parts.context = ctx.text;
            const std::string prompt = render_prompt(parts, clients.placement);
            const GenerateResult res = generate(*clients.answer_backend, prompt, params);
            const auto end = std::chrono::steady_clock::now();
            r.answer = res.text;
            r.answer_chars = codepoint_count(r.answer);
            r.latency_s = std::chrono::duration<double>(end - start).count();
            if (r.latency_s <= 0.0) r.latency_s = 1e-9;
            r.context_used = ctx.text;
            return r;
        }
    }

    const std::string prompt = render_prompt(parts, clients.placement);
    const GenerateResult res = generate(*clients.answer_backend, prompt, params);
    r.answer = res.text;
    r.answer_chars = codepoint_count(r.answer);
    r.latency_s = res.latency_s;
    return r;
}

std::optional<int> parse_judge_score(const std::string& raw) {
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (c < '0' || c > '3') continue;
        const bool prev_digit = i > 0 && is_digit(raw[i - 1]);
        const bool next_digit = i + 1 < raw.size() && is_digit(raw[i + 1]);
        if (!prev_digit && !next_digit) return c - '0';
    }
    return std::nullopt;
}

JudgeVerdict judge(const std::string& question, const std::string& answer,
                   LlmBackend& judge_backend, const std::string& judge_model,
                   double timeout_s) {
    GenerationParams params = GenerationParams::case_a_c(judge_model, timeout_s);
    params.num_predict = 256;  // a verdict, not an essay
    const std::string prompt = render_prompt(judge_prompt(question, answer));

    std::string raw;
    for (int ask = 0; ask < 2; ++ask) {
        raw = generate(judge_backend, prompt, params).text;
        if (auto score = parse_judge_score(raw)) {
            return JudgeVerdict{*score, raw};
        }
    }
    throw std::runtime_error("judge response carries no score 0-3: " + raw);
}

namespace {

// Reads completed (question, case) keys; truncates a torn trailing line left
// by a crash. A malformed line elsewhere is corruption and aborts.
std::set<std::string> scan_resume_file(const std::string& path) {
    std::set<std::string> done;
    std::ifstream in(path, std::ios::binary);
    if (!in) return done;

    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    in.close();

    std::size_t pos = 0;
    std::size_t valid_end = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        const bool has_newline = eol != std::string::npos;
        if (!has_newline) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        if (!line.empty()) {
            try {
                const EvalRecord r = eval_record_from_json(line);
                done.insert(r.question_id + "\x1f" +
                            std::string(to_string(r.case_label)));
            } catch (const std::exception&) {
                if (has_newline) {
                    throw std::runtime_error(path +
                                             ": corrupt record mid-file; refusing to resume");
                }
                // Torn trailing line: drop it and retry the pair.
                std::filesystem::resize_file(path, valid_end);
                return done;
            }
        }
        if (!has_newline) break;
        pos = eol + 1;
        valid_end = pos;
    }
    return done;
}

}  // namespace

RunSummary run_benchmark(const std::vector<TestQuestion>& questions,
                         const RunOptions& options, const KnowledgeGraph* graph,
                         const EvalClients& clients, const RetrievalConfig& cfg,
                         const std::string& out_path) {
    if (!clients.judge_backend) {
        throw std::invalid_argument("judge backend not configured");
    }
    // Judge independence: the judge model must differ from every answering
    // model in this run.
    for (CaseLabel c : options.cases) {
        const std::string& model =
            c == CaseLabel::B ? clients.model_ft : clients.model_plain;
        if (!clients.judge_model.empty() && clients.judge_model == model) {
            throw std::invalid_argument(
                "judge model must differ from the case " +
                std::string(to_string(c)) + " answering model");
        }
    }

    std::set<std::string> done;
    if (options.resume) {
        done = scan_resume_file(out_path);
    } else if (std::filesystem::exists(out_path) &&
               std::filesystem::file_size(out_path) > 0) {
        throw std::runtime_error(out_path + " exists; pass resume to continue it");
    }

    struct Pair {
        const TestQuestion* q;
        CaseLabel c;
    };
    std::vector<Pair> todo;
    RunSummary summary;
    for (const auto& q : questions) {
        for (CaseLabel c : options.cases) {
            if (done.count(q.id + "\x1f" + std::string(to_string(c)))) {
                ++summary.skipped;
                continue;
            }
            todo.push_back(Pair{&q, c});
        }
    }

    std::ofstream out(out_path, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + out_path);

    std::mutex write_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) break;
            const Pair& pair = todo[i];

            EvalRecord record;
            try {
                record = answer_case(*pair.q, pair.c, graph, clients, cfg);
                record.verdict = judge(pair.q->text, record.answer,
                                       *clients.judge_backend, clients.judge_model,
                                       clients.timeout_s);
            } catch (const std::exception& e) {
                record = EvalRecord{};
                record.question_id = pair.q->id;
                record.category = pair.q->category;
                record.case_label = pair.c;
                record.error = e.what();
            }

            std::lock_guard<std::mutex> lock(write_mu);
            if (options.max_records > 0 && summary.written >= options.max_records) {
                stop.store(true);
                break;
            }
            out << eval_record_to_json(record) << '\n';
            out.flush();
            ++summary.written;
            if (!record.error.empty()) ++summary.failed;
            if (options.max_records > 0 && summary.written >= options.max_records) {
                stop.store(true);
            }
        }
    };

    const int workers = std::max(options.workers, 1);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return summary;
}

}  // namespace graphqa
