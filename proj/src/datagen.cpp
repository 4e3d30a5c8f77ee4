#include "graphqa/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "graphqa/prompts.hpp"
#include "graphqa/text.hpp"

namespace graphqa {

void TrainingSet::recount() {
    per_relation_counts.clear();
    for (const auto& p : pairs) ++per_relation_counts[p.relation];
}

std::string edge_key(const Edge& e) {
    return e.src + "|" + std::string(to_string(e.rel)) + "|" + e.dst;
}

std::vector<std::pair<std::string, std::string>> extract_qa_array(const std::string& raw) {
    std::vector<std::size_t> tried;
    for (std::size_t pos = raw.find('['); pos != std::string::npos;
         pos = raw.find('[', pos + 1)) {
        tried.push_back(pos);
        std::istringstream stream(raw.substr(pos));
        nlohmann::json value;
        try {
            stream >> value;  // decodes one JSON value, ignoring what follows
        } catch (const nlohmann::json::parse_error&) {
            continue;
        }
        if (!value.is_array() || value.empty()) continue;

        std::vector<std::pair<std::string, std::string>> pairs;
        bool ok = true;
        for (const auto& item : value) {
            if (!item.is_object() || !item.contains("question") ||
                !item.contains("answer") || !item["question"].is_string() ||
                !item["answer"].is_string()) {
                ok = false;
                break;
            }
            auto q = item["question"].get<std::string>();
            auto a = item["answer"].get<std::string>();
            if (q.empty() || a.empty()) {
                ok = false;
                break;
            }
            pairs.emplace_back(std::move(q), std::move(a));
        }
        if (ok) return pairs;
    }

    std::string positions;
    for (std::size_t p : tried) {
        if (!positions.empty()) positions += ", ";
        positions += std::to_string(p);
    }
    throw std::runtime_error("no QA array found in model output (offsets tried: " +
                             (positions.empty() ? std::string("none") : positions) + ")");
}

DatagenResult generate_pairs(const KnowledgeGraph& graph, LlmBackend& backend,
                             const GenerationParams& params,
                             const DatagenPolicy& policy) {
    const auto& edges = graph.edges();
    const auto n = static_cast<long>(edges.size());

    std::vector<std::vector<QAPair>> per_edge(edges.size());
    std::vector<SkipEntry> per_edge_skip(edges.size());
    std::vector<char> skipped(edges.size(), 0);

#ifdef _OPENMP
#pragma omp parallel for num_threads(std::max(policy.workers, 1)) schedule(dynamic) \
    if (policy.workers > 1)
#endif
    for (long li = 0; li < n; ++li) {
        const auto i = static_cast<std::size_t>(li);
        const Edge& e = edges[i];
        const PromptParts parts = triple_prompt(graph.at(e.src), e.rel, graph.at(e.dst));
        const std::string prompt = render_prompt(parts);

        int attempts = 0;
        try {
            const GenerateResult res = generate_with_retry(
                backend, prompt, params,
                RetryPolicy{policy.max_attempts, policy.backoff}, &attempts);
            auto extracted = extract_qa_array(res.text);
            if (extracted.size() > 3) extracted.resize(3);
            for (auto& [q, a] : extracted) {
                per_edge[i].push_back(QAPair{std::move(q), std::move(a), e, e.rel});
            }
        } catch (const std::exception& ex) {
            per_edge_skip[i] = SkipEntry{edge_key(e), attempts, ex.what()};
            skipped[i] = 1;
        }
    }

    DatagenResult out;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (skipped[i]) {
            out.skips.push_back(std::move(per_edge_skip[i]));
        } else {
            for (auto& p : per_edge[i]) out.candidates.pairs.push_back(std::move(p));
        }
    }
    out.candidates.recount();
    return out;
}

TrainingSet dedup_pairs(const std::vector<QAPair>& pairs, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0) {
        throw std::invalid_argument("dedup threshold must be in (0, 1]");
    }
    TrainingSet out;
    std::vector<BigramProfile> kept_profiles;
    for (const auto& pair : pairs) {
        const BigramProfile profile = BigramProfile::of(pair.question);
        bool duplicate = false;
        for (const auto& kept : kept_profiles) {
            if (bigram_jaccard(profile, kept) >= threshold) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) {
            ++out.dropped_duplicates;
        } else {
            kept_profiles.push_back(profile);
            out.pairs.push_back(pair);
        }
    }
    out.recount();
    return out;
}

namespace {

// Largest-remainder apportionment of `size` across relation buckets, in
// RelationKind order. Integer arithmetic throughout.
std::map<RelationKind, std::size_t> apportion(
    const std::map<RelationKind, std::size_t>& counts, std::size_t size,
    std::size_t total) {
    std::map<RelationKind, std::size_t> quota;
    std::vector<std::pair<std::size_t, RelationKind>> remainders;  // (remainder, rel)
    std::size_t assigned = 0;
    for (const auto& [rel, count] : counts) {
        const std::size_t exact_num = size * count;
        quota[rel] = exact_num / total;
        assigned += quota[rel];
        remainders.emplace_back(exact_num % total, rel);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t leftover = size - assigned;
    for (const auto& [rem, rel] : remainders) {
        if (leftover == 0) break;
        ++quota[rel];
        --leftover;
    }
    return quota;
}

}  // namespace

std::vector<TrainingSet> stratified_subsets(const TrainingSet& set,
                                            const std::vector<std::size_t>& sizes,
                                            std::uint64_t seed) {
    std::map<RelationKind, std::vector<std::size_t>> pool;  // indices, input order
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        pool[set.pairs[i].relation].push_back(i);
    }
    std::map<RelationKind, std::size_t> counts;
    for (const auto& [rel, idxs] : pool) counts[rel] = idxs.size();
    const std::size_t total = set.pairs.size();

    std::vector<TrainingSet> out;
    for (const std::size_t size : sizes) {
        if (size > total) {
            throw std::invalid_argument("subset size " + std::to_string(size) +
                                        " exceeds pool of " + std::to_string(total));
        }
        const auto quota = apportion(counts, size, total);

        // One generator per subset keeps sizes independent of each other.
        std::mt19937_64 rng(seed * 1000003ull + size);
        std::vector<std::size_t> selected;
        for (const auto& [rel, take] : quota) {
            std::vector<std::size_t> bucket = pool[rel];
            // Partial Fisher-Yates with modulo draws: uniform_int_distribution
            // is implementation-defined, this is byte-stable everywhere.
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = i + rng() % (bucket.size() - i);
                std::swap(bucket[i], bucket[j]);
                selected.push_back(bucket[i]);
            }
        }
        std::sort(selected.begin(), selected.end());

        TrainingSet subset;
        for (std::size_t idx : selected) subset.pairs.push_back(set.pairs[idx]);
        subset.recount();
        out.push_back(std::move(subset));
    }
    return out;
}

std::string export_chat_format_string(const TrainingSet& set,
                                      const std::string& system_prompt) {
    std::string out;
    for (const auto& p : set.pairs) {
        nlohmann::json line;
        line["messages"] = nlohmann::json::array({
            {{"role", "system"}, {"content", system_prompt}},
            {{"role", "user"}, {"content", p.question}},
            {{"role", "assistant"}, {"content", p.answer}},
        });
        line["relation"] = std::string(to_string(p.relation));
        line["triple"] = {p.src_triple.src, std::string(to_string(p.src_triple.rel)),
                          p.src_triple.dst};
        out += line.dump();
        out += '\n';
    }
    return out;
}

void export_chat_format(const TrainingSet& set, const std::string& system_prompt,
                        const std::string& path) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw std::runtime_error("cannot write " + path);
    outf << export_chat_format_string(set, system_prompt);
    if (!outf) throw std::runtime_error("failed writing " + path);
}

TrainingSet import_chat_format(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    TrainingSet set;
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
        QAPair p;
        for (const auto& msg : j.at("messages")) {
            const auto role = msg.at("role").get<std::string>();
            if (role == "user") p.question = msg.at("content").get<std::string>();
            if (role == "assistant") p.answer = msg.at("content").get<std::string>();
        }
        const auto rel = parse_relation_kind(j.at("relation").get<std::string>());
        if (!rel) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown relation");
        }
        p.relation = *rel;
        const auto& triple = j.at("triple");
        const auto trel = parse_relation_kind(triple.at(1).get<std::string>());
        if (!trel) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown triple relation");
        }
        p.src_triple = Edge{triple.at(0).get<std::string>(), *trel,
                            triple.at(2).get<std::string>()};
        if (p.question.empty() || p.answer.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": empty question or answer");
        }
        set.pairs.push_back(std::move(p));
    }
    set.recount();
    return set;
}

void write_skip_log(const std::vector<SkipEntry>& skips, const std::string& path) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw std::runtime_error("cannot write " + path);
    for (const auto& s : skips) {
        nlohmann::json j{{"edge", s.edge}, {"attempts", s.attempts},
                         {"last_error", s.last_error}};
        outf << j.dump() << '\n';
    }
}

}  // namespace graphqa
