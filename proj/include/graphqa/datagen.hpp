#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphqa/graph.hpp"
#include "graphqa/llm_client.hpp"

namespace graphqa {

struct QAPair {
    std::string question;
    std::string answer;
    Edge src_triple;
    RelationKind relation = RelationKind::HAS_CHAPTER;

    bool operator==(const QAPair&) const = default;
};

struct TrainingSet {
    std::vector<QAPair> pairs;
    std::size_t dropped_duplicates = 0;
    std::map<RelationKind, std::size_t> per_relation_counts;

    void recount();
};

// Tolerant recovery of a QA array from raw model output: scans left to right
// and attempts one JSON value decode at each '[', accepting the first
// non-empty array of objects with non-empty "question"/"answer" strings.
// Text after the array (trailing citations etc.) is ignored. Throws
// std::runtime_error naming the scan positions tried when nothing parses.
std::vector<std::pair<std::string, std::string>> extract_qa_array(const std::string& raw);

struct SkipEntry {
    std::string edge;  // "src|REL|dst"
    int attempts = 0;
    std::string last_error;
};

struct DatagenPolicy {
    int max_attempts = 3;
    int workers = 1;
    std::function<void(int)> backoff;  // optional inter-attempt hook
};

struct DatagenResult {
    TrainingSet candidates;  // pre-dedup, ordered by edge
    std::vector<SkipEntry> skips;
};

std::string edge_key(const Edge& e);

// Iterates every edge: triple prompt -> generate_with_retry ->
// extract_qa_array, keeping at most three pairs per edge. Failed edges are
// skipped and logged, never fatal. Results are re-ordered by edge index so
// any worker count yields identical output.
DatagenResult generate_pairs(const KnowledgeGraph& graph, LlmBackend& backend,
                             const GenerationParams& params,
                             const DatagenPolicy& policy = {});

// Greedy first-kept scan in input order: a pair is dropped when its
// question's bigram Jaccard with any kept question reaches the threshold.
TrainingSet dedup_pairs(const std::vector<QAPair>& pairs, double threshold = 0.45);

// Per-relation proportional allocation (largest-remainder rounding), sampled
// without replacement with a deterministic generator derived from the seed.
// Subsets are independent per size, ordered as in the input set.
std::vector<TrainingSet> stratified_subsets(const TrainingSet& set,
                                            const std::vector<std::size_t>& sizes,
                                            std::uint64_t seed);

// Chat-format training lines:
// {"messages":[{system},{user},{assistant}],"relation":rel,"triple":[s,r,t]}
std::string export_chat_format_string(const TrainingSet& set,
                                      const std::string& system_prompt);
void export_chat_format(const TrainingSet& set, const std::string& system_prompt,
                        const std::string& path);
TrainingSet import_chat_format(const std::string& path);

void write_skip_log(const std::vector<SkipEntry>& skips, const std::string& path);

}  // namespace graphqa
