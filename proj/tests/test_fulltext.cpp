#include <doctest.h>

#include <cmath>
#include <map>

#include "graphqa/fulltext.hpp"
#include "graphqa/text.hpp"
#include "test_support.hpp"

using namespace graphqa;

namespace {

// Reference BM25 computed from scratch over raw token lists: recounts tf, df
// and average length independently of the index internals.
std::map<std::string, double> bm25_oracle(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& docs,
    const std::string& query, double k1 = 1.2, double b = 0.75) {
    const auto terms = analyze_tokens(query);
    const double n_docs = static_cast<double>(docs.size());

    double avg_len = 0;
    for (const auto& [id, tokens] : docs) avg_len += static_cast<double>(tokens.size());
    avg_len = docs.empty() ? 0.0 : avg_len / n_docs;

    std::map<std::string, double> scores;
    for (const auto& term : terms) {
        double df = 0;
        for (const auto& [id, tokens] : docs) {
            if (std::count(tokens.begin(), tokens.end(), term) > 0) df += 1;
        }
        if (df == 0) continue;
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const auto& [id, tokens] : docs) {
            const auto tf =
                static_cast<double>(std::count(tokens.begin(), tokens.end(), term));
            if (tf == 0) continue;
            const double len = static_cast<double>(tokens.size());
            const double denom =
                tf + k1 * (1.0 - b + b * (len / (avg_len > 0 ? avg_len : 1.0)));
            scores[id] += idf * tf * (k1 + 1.0) / denom;
        }
    }
    return scores;
}

}  // namespace

TEST_CASE("BM25 scores match a hand-computed oracle to 1e-9") {
    const std::vector<std::pair<std::string, std::vector<std::string>>> docs = {
        {"d1", analyze_tokens("堤防点検 堤防点検 堤防の定期的な点検を行う")},
        {"d2", analyze_tokens("砂防堰堤 砂防堰堤 土石流を捕捉する堰堤")},
        {"d3", analyze_tokens("点検計画 点検計画 点検の頻度と計画")},
    };
    FulltextIndex index;
    for (const auto& [id, tokens] : docs) index.add_document(id, tokens);
    index.finalize();

    for (const std::string query : {"点検", "砂防堰堤", "堤防の点検計画"}) {
        const auto expected = bm25_oracle(docs, query);
        const auto hits = index.search(query, 10);
        CHECK(hits.size() == expected.size());
        for (const auto& hit : hits) {
            REQUIRE(expected.count(hit.doc_id) == 1);
            CHECK(hit.score == doctest::Approx(expected.at(hit.doc_id)).epsilon(1e-9));
            CHECK(hit.score > 0.0);
        }
    }
}

TEST_CASE("query equal to a node name ranks that node first") {
    const auto g = testsupport::load_mini_graph();
    const auto hits = g.fulltext_search("StabilityCalculation", 5);
    REQUIRE(!hits.empty());
    CHECK(hits[0].doc_id == "tech_stab");

    const auto jp = g.fulltext_search("砂防堰堤設計", 5);
    REQUIRE(!jp.empty());
    CHECK(jp[0].doc_id == "ch_s1");
}

TEST_CASE("search results are a stable prefix as k grows") {
    const auto g = testsupport::load_mini_graph();
    const auto small = g.fulltext_search("点検", 2);
    const auto large = g.fulltext_search("点検", 8);
    REQUIRE(small.size() <= large.size());
    for (std::size_t i = 0; i < small.size(); ++i) {
        CHECK(small[i].doc_id == large[i].doc_id);
        CHECK(small[i].score == large[i].score);
    }
    // Descending scores, id tie-break.
    for (std::size_t i = 1; i < large.size(); ++i) {
        const bool ordered =
            large[i - 1].score > large[i].score ||
            (large[i - 1].score == large[i].score &&
             large[i - 1].doc_id < large[i].doc_id);
        CHECK(ordered);
    }
}

TEST_CASE("no shared token yields an empty result") {
    const auto g = testsupport::load_mini_graph();
    CHECK(g.fulltext_search("zzzz", 5).empty());
}

TEST_CASE("untokenizable query throws") {
    const auto g = testsupport::load_mini_graph();
    CHECK_THROWS_AS(g.fulltext_search("!?!", 5), std::invalid_argument);
}
