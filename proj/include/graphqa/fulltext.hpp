#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphqa {

// BM25 inverted index over analyze_tokens() output. Documents are added once
// at build time; the index is immutable afterwards.
//
// Scoring uses the Lucene-style idf = ln(1 + (N - df + 0.5) / (df + 0.5)),
// which is strictly positive, so every document containing at least one query
// term receives a positive score.
class FulltextIndex {
public:
    struct Params {
        double k1 = 1.2;
        double b = 0.75;
    };

    struct Hit {
        std::string doc_id;
        double score = 0.0;
    };

    FulltextIndex() = default;
    explicit FulltextIndex(Params params) : params_(params) {}

    // doc_id must be unique. Token multiplicity carries field weighting:
    // callers duplicate weighted fields before tokenization.
    void add_document(std::string doc_id, const std::vector<std::string>& tokens);

    void finalize();

    // Top-k by (score desc, doc_id asc). Only documents sharing at least one
    // token with the query are returned. Query tokenized with analyze_tokens.
    std::vector<Hit> search(std::string_view query, std::size_t k) const;

    std::size_t doc_count() const { return docs_.size(); }

private:
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
    };
    struct Doc {
        std::string id;
        std::uint32_t length = 0;
    };

    double idf(std::size_t df) const;

    Params params_;
    std::vector<Doc> docs_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avg_doc_len_ = 0.0;
    bool finalized_ = false;
};

}  // namespace graphqa
