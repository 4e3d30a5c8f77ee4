#include "graphqa/fulltext.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "graphqa/text.hpp"

namespace graphqa {

void FulltextIndex::add_document(std::string doc_id, const std::vector<std::string>& tokens) {
    assert(!finalized_);
    const auto doc_idx = static_cast<std::uint32_t>(docs_.size());
    docs_.push_back(Doc{std::move(doc_id), static_cast<std::uint32_t>(tokens.size())});

    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) {
        postings_[term].push_back(Posting{doc_idx, count});
    }
}

void FulltextIndex::finalize() {
    double total = 0.0;
    for (const auto& d : docs_) total += d.length;
    avg_doc_len_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
    for (auto& [term, list] : postings_) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
    }
    finalized_ = true;
}

double FulltextIndex::idf(std::size_t df) const {
    const double n = static_cast<double>(docs_.size());
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::vector<FulltextIndex::Hit> FulltextIndex::search(std::string_view query,
                                                      std::size_t k) const {
    const auto terms = analyze_tokens(query);
    if (terms.empty()) {
        throw std::invalid_argument("fulltext query has no indexable tokens");
    }

    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(it->second.size());
        for (const Posting& p : it->second) {
            const double len_norm =
                1.0 - params_.b +
                params_.b * (docs_[p.doc].length / (avg_doc_len_ > 0 ? avg_doc_len_ : 1.0));
            const double tf = static_cast<double>(p.tf);
            scores[p.doc] += w * (tf * (params_.k1 + 1.0)) / (tf + params_.k1 * len_norm);
        }
    }

    std::vector<Hit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
        hits.push_back(Hit{docs_[doc].id, score});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace graphqa
