#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "graphqa/graph.hpp"

namespace graphqa {

// The five fan-out sub-queries plus the broadened retry search.
enum class QueryKind {
    Fulltext,
    FacilityContext,
    HazardFacilityMap,
    MaintenanceCycle,
    FacilityComparison,
    BroadSection,
};

std::string_view to_string(QueryKind kind);

struct KeywordSet {
    std::vector<std::string> keywords;  // ordered, no duplicates
    std::string source_question;
};

struct RetrievalRecord {
    QueryKind query_kind = QueryKind::Fulltext;
    std::vector<std::string> node_ids;      // ordered along the match/path
    std::vector<RelationKind> relations;    // relations along the path
    std::string rendered;                   // one context line
    double engine_score = 0.0;              // fulltext only, BM25
    int match_count = 0;                    // distinct keywords matched
    double final_score = 0.0;

    // Query-kind-agnostic identity: sorted node ids plus the sorted relation
    // signature, so the same evidence found by two sub-queries collapses.
    std::string dedup_key() const;
};

struct RetrievalConfig {
    int top_k = 20;
    double rerank_ratio = 0.8;
    int context_cap_chars = 2000;
    int retry_threshold = 25;
    int max_retries = 1;

    // Reads GRAPH_TOP_K, GRAPH_RERANK_RATIO, GRAPH_CONTEXT_CAP and
    // GRAPH_RETRY_THRESHOLD; unset variables keep the defaults above.
    static RetrievalConfig from_env();
};

struct RankedContext {
    std::vector<RetrievalRecord> records;  // included subset, score-ordered
    std::string text;                      // <= context_cap_chars code points
    int total_candidates = 0;              // deduplicated hits before filtering
    bool retried = false;
};

// Longest-match lookup of the graph's name/alias dictionary over the
// question, in question order; falls back to script-run tokens minus
// stopwords when the dictionary yields nothing. Throws std::invalid_argument
// on an empty or whitespace-only question.
KeywordSet extract_keywords(std::string_view question, const KnowledgeGraph& graph);

// Union of the five sub-queries, each capped at k hits, concatenated in
// QueryKind order. `workers` > 1 runs the sub-queries in parallel (OpenMP);
// output is canonical regardless of worker count.
std::vector<RetrievalRecord> run_fanout(const KeywordSet& keywords,
                                        const KnowledgeGraph& graph,
                                        const RetrievalConfig& cfg, int k,
                                        int workers = 1);

// Retry-path substring search over Chapter/Section/TechnicalConcept names.
std::vector<RetrievalRecord> broad_section_query(const KeywordSet& keywords,
                                                 const KnowledgeGraph& graph, int k);

// Collapses records with identical dedup keys, keeping the highest-scoring
// representative in the first occurrence's position.
std::vector<RetrievalRecord> dedup_records(std::vector<RetrievalRecord> records);

// Sets match_count and final_score: BM25 engine score x 10 for fulltext
// records, keyword match count for everything else. Matching scans the
// rendered text plus the node names when a graph is supplied.
void score_records(std::vector<RetrievalRecord>& records, const KeywordSet& keywords,
                   const KnowledgeGraph* graph = nullptr);

// ceil(ratio * positive_count), at least 1 when any positive record exists.
std::size_t rerank_select_count(std::size_t positive_count, double ratio);

// Full pipeline: extract -> fan-out -> dedup/score -> adaptive retry (doubled
// depth plus broad section search when deduplicated hits fall below the
// threshold) -> positive-score filter -> top-share selection -> rendered
// context hard-truncated at the cap.
RankedContext retrieve(std::string_view question, const KnowledgeGraph& graph,
                       const RetrievalConfig& cfg, int workers = 1);

// Data-parallel batch retrieval over independent questions (OpenMP).
std::vector<RankedContext> retrieve_batch(const std::vector<std::string>& questions,
                                          const KnowledgeGraph& graph,
                                          const RetrievalConfig& cfg, int workers);

// Serial reference for retrieve_batch, kept for tests and the benchmark.
std::vector<RankedContext> retrieve_batch_reference(
    const std::vector<std::string>& questions, const KnowledgeGraph& graph,
    const RetrievalConfig& cfg);

}  // namespace graphqa
