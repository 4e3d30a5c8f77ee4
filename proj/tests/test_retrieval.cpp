#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "graphqa/retrieval.hpp"
#include "graphqa/text.hpp"
#include "test_support.hpp"

using namespace graphqa;
using testsupport::load_mini_graph;

namespace {

KeywordSet kw(std::vector<std::string> words) {
    KeywordSet set;
    set.keywords = std::move(words);
    set.source_question = "test";
    return set;
}

// Synthetic bundle: `n` chapters named "alpha NN 点検" under one standard.
KnowledgeGraph alpha_graph(int n) {
    std::string std_csv = "id,name,description\nstd1,base standard,共通の基準\n";
    std::string csi = "id,kind,name,description,parent_id\n";
    for (int i = 1; i <= n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "ch%03d", i);
        char name[32];
        std::snprintf(name, sizeof(name), "alpha %02d 点検", i);
        csi += std::string(id) + ",Chapter," + name + ",章の説明,std1\n";
    }
    return KnowledgeGraph::load_bundle_strings({
        {"nodes_standard.csv", std_csv},
        {"nodes_chapter_section_item.csv", csi},
        {"nodes_domain.csv", "id,kind,name,description,aliases\n"},
        {"relations.csv", "src,rel,dst\n"},
    });
}

}  // namespace

TEST_CASE("extract_keywords: dictionary longest match in question order") {
    const auto g = load_mini_graph();
    const auto set =
        extract_keywords("SaboDamの安定計算について教えてください。", g);
    CHECK(set.keywords == std::vector<std::string>{"SaboDam", "安定計算"});

    // Case-insensitive match emits the question's surface form.
    const auto lower = extract_keywords("sabodamとは何ですか。", g);
    CHECK(lower.keywords == std::vector<std::string>{"sabodam"});

    // Longest match wins over a shorter prefix.
    const auto longest = extract_keywords("安定計算手法を説明してください。", g);
    CHECK(longest.keywords.front() == "安定計算手法");
}

TEST_CASE("extract_keywords rejects empty questions") {
    const auto g = load_mini_graph();
    CHECK_THROWS_AS(extract_keywords("", g), std::invalid_argument);
    CHECK_THROWS_AS(extract_keywords("   \t\n", g), std::invalid_argument);
}

namespace {

// Independent tokenizer: own run classification over decoded code points.
std::vector<std::string> fallback_oracle(const std::string& text) {
    auto cjk = [](char32_t c) {
        return (c >= 0x3040 && c <= 0x30FF) || (c >= 0x31F0 && c <= 0x31FF) ||
               (c >= 0x3400 && c <= 0x4DBF) || (c >= 0x4E00 && c <= 0x9FFF) ||
               (c >= 0xF900 && c <= 0xFAFF) || (c >= 0xFF66 && c <= 0xFF9D) ||
               (c >= 0xAC00 && c <= 0xD7AF) || c == 0x3005;
    };
    auto word = [](char32_t c) {
        return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
               (c >= 'a' && c <= 'z');
    };
    const auto cps = utf8_decode(text);
    std::vector<std::string> raw;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (cjk(cps[i])) {
            std::size_t j = i;
            while (j < cps.size() && cjk(cps[j])) ++j;
            for (std::size_t a = i; a + 1 < j; ++a) {
                std::string t;
                utf8_append(t, cps[a]);
                utf8_append(t, cps[a + 1]);
                raw.push_back(t);
            }
            i = j;
        } else if (word(cps[i])) {
            std::string t;
            while (i < cps.size() && word(cps[i])) {
                char32_t c = cps[i];
                if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
                utf8_append(t, c);
                ++i;
            }
            raw.push_back(t);
        } else {
            ++i;
        }
    }
    std::vector<std::string> out;
    const auto& stop = fallback_stopwords();
    for (const auto& t : raw) {
        if (std::count(stop.begin(), stop.end(), t)) continue;
        if (std::count(out.begin(), out.end(), t)) continue;
        out.push_back(t);
    }
    return out;
}

}  // namespace

TEST_CASE("extract_keywords falls back to tokenizer when no dictionary hit") {
    const auto g = load_mini_graph();
    const std::string q = "まったく別の話題 xyz を扱います";
    const auto set = extract_keywords(q, g);
    CHECK(set.keywords == fallback_oracle(q));
    CHECK(!set.keywords.empty());
}

TEST_CASE("run_fanout matches the hand-enumerated traversal oracle") {
    const auto g = load_mini_graph();
    const RetrievalConfig cfg;
    auto records = run_fanout(kw({"SaboDam", "土石流"}), g, cfg, cfg.top_k);

    using Key = std::pair<std::string, std::vector<std::string>>;
    std::multiset<Key> got;
    for (const auto& r : records) {
        if (r.query_kind == QueryKind::Fulltext) continue;
        got.insert({std::string(to_string(r.query_kind)), r.node_ids});
    }

    // Brute-force enumeration over the 25-node fixture.
    const std::multiset<Key> expected = {
        {"FacilityContext", {"fac_sabodam", "ch_s1"}},
        {"FacilityContext", {"fac_sabodam", "ch_s1", "sec_s1a"}},
        {"FacilityContext", {"fac_sabodam", "ch_s1", "sec_s1b"}},
        {"FacilityContext", {"fac_sabodam", "tech_drain"}},
        {"FacilityContext", {"fac_sabodam", "tech_drain", "sec_s1b"}},
        {"FacilityContext", {"fac_sabodam", "tech_stab"}},
        {"FacilityContext", {"fac_sabodam", "tech_stab", "sec_s1a"}},
        {"HazardFacilityMap", {"haz_debris", "fac_dam"}},
        {"HazardFacilityMap", {"haz_debris", "fac_dam", "ch_r1"}},
        {"HazardFacilityMap", {"haz_debris", "fac_sabodam"}},
        {"HazardFacilityMap", {"haz_debris", "fac_sabodam", "ch_s1"}},
    };
    CHECK(got == expected);

    // Fulltext slot agrees with the index itself.
    std::vector<std::string> fulltext_ids;
    for (const auto& r : records) {
        if (r.query_kind == QueryKind::Fulltext) fulltext_ids.push_back(r.node_ids[0]);
    }
    std::vector<std::string> engine_ids;
    for (const auto& hit : g.fulltext_search("SaboDam 土石流", 20)) {
        engine_ids.push_back(hit.doc_id);
    }
    CHECK(fulltext_ids == engine_ids);
}

TEST_CASE("run_fanout facility and process coverage") {
    const auto g = load_mini_graph();
    const RetrievalConfig cfg;

    // A keyword naming a facility yields at least one FacilityContext record.
    auto records = run_fanout(kw({"SaboDam"}), g, cfg, cfg.top_k);
    const bool has_facility = std::any_of(records.begin(), records.end(), [](auto& r) {
        return r.query_kind == QueryKind::FacilityContext &&
               r.node_ids.front() == "fac_sabodam";
    });
    CHECK(has_facility);

    // A process keyword surfaces the whole PRECEDES chain through it.
    auto chain_records = run_fanout(kw({"設計"}), g, cfg, cfg.top_k);
    bool has_chain = false;
    for (const auto& r : chain_records) {
        if (r.query_kind != QueryKind::MaintenanceCycle) continue;
        has_chain = true;
        CHECK(r.node_ids == std::vector<std::string>{"proc_survey", "proc_plan",
                                                     "proc_design", "proc_maint"});
    }
    CHECK(has_chain);

    // Two matched facilities with a shared neighbor produce a comparison.
    auto cmp_records = run_fanout(kw({"Dam", "Levee"}), g, cfg, cfg.top_k);
    const bool has_cmp = std::any_of(cmp_records.begin(), cmp_records.end(), [](auto& r) {
        return r.query_kind == QueryKind::FacilityComparison &&
               r.node_ids == std::vector<std::string>{"fac_dam", "fac_levee",
                                                      "tech_insp"};
    });
    CHECK(has_cmp);

    // No keyword matches anything: only (empty) fulltext remains.
    auto none = run_fanout(kw({"zzzz"}), g, cfg, cfg.top_k);
    CHECK(none.empty());
}

TEST_CASE("fanout is identical across worker counts") {
    const auto g = load_mini_graph();
    const RetrievalConfig cfg;
    const auto serial = run_fanout(kw({"SaboDam", "土石流", "設計"}), g, cfg, 20, 1);
    const auto parallel = run_fanout(kw({"SaboDam", "土石流", "設計"}), g, cfg, 20, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].node_ids == parallel[i].node_ids);
        CHECK(serial[i].rendered == parallel[i].rendered);
        CHECK(serial[i].engine_score == parallel[i].engine_score);
    }
}

TEST_CASE("dedup_records collapses cross-query duplicates keeping the best score") {
    RetrievalRecord a;
    a.query_kind = QueryKind::Fulltext;
    a.node_ids = {"n1", "n2"};
    a.final_score = 3.0;
    RetrievalRecord b;
    b.query_kind = QueryKind::FacilityContext;
    b.node_ids = {"n2", "n1"};  // same pair, different order
    b.final_score = 7.0;
    RetrievalRecord c;
    c.query_kind = QueryKind::FacilityContext;
    c.node_ids = {"n3"};
    c.final_score = 1.0;

    const auto out = dedup_records({a, b, c});
    REQUIRE(out.size() == 2);
    CHECK(out[0].final_score == 7.0);  // representative replaced in place
    CHECK(out[0].query_kind == QueryKind::FacilityContext);
    CHECK(out[1].node_ids == std::vector<std::string>{"n3"});
}

TEST_CASE("dedup_records is identity on all-distinct input") {
    std::vector<RetrievalRecord> records;
    for (int i = 0; i < 5; ++i) {
        RetrievalRecord r;
        r.node_ids = {"n" + std::to_string(i)};
        records.push_back(r);
    }
    const auto out = dedup_records(records);
    REQUIRE(out.size() == 5);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].node_ids == records[i].node_ids);
    }
}

TEST_CASE("dedup_records: 3 planted duplicates among 10 leave exactly 7") {
    std::vector<RetrievalRecord> records;
    for (int i = 0; i < 7; ++i) {
        RetrievalRecord r;
        r.node_ids = {"n" + std::to_string(i)};
        r.relations = {RelationKind::REQUIRES};
        records.push_back(r);
    }
    // Plant duplicates of records 0, 3 and 6 with permuted ids.
    for (int i : {0, 3, 6}) {
        RetrievalRecord r = records[static_cast<std::size_t>(i)];
        r.query_kind = QueryKind::BroadSection;
        records.push_back(r);
    }

    // Oracle: the number of distinct dedup keys.
    std::set<std::string> keys;
    for (const auto& r : records) keys.insert(r.dedup_key());
    const auto out = dedup_records(records);
    CHECK(out.size() == keys.size());
    CHECK(out.size() == 7);
}

TEST_CASE("score_records applies the x10 fulltext rule and match counts") {
    KeywordSet set = kw({"alpha", "beta", "gamma", "delta"});

    RetrievalRecord full;
    full.query_kind = QueryKind::Fulltext;
    full.rendered = "anything";
    full.engine_score = 0.85;

    RetrievalRecord ctx;
    ctx.query_kind = QueryKind::FacilityContext;
    ctx.rendered = "alpha and beta relate to gamma";

    RetrievalRecord none;
    none.query_kind = QueryKind::BroadSection;
    none.rendered = "nothing relevant";

    std::vector<RetrievalRecord> records{full, ctx, none};
    score_records(records, set);
    CHECK(records[0].final_score == doctest::Approx(8.5));
    CHECK(records[1].final_score == 3.0);
    CHECK(records[1].match_count == 3);
    CHECK(records[2].final_score == 0.0);
}

TEST_CASE("rerank_select_count takes the ceiling share") {
    const std::vector<std::size_t> expected = {1, 2, 3, 4, 4, 5, 6, 7, 8, 8, 9, 10};
    for (std::size_t n = 1; n <= 12; ++n) {
        CHECK(rerank_select_count(n, 0.8) == expected[n - 1]);
    }
    CHECK(rerank_select_count(0, 0.8) == 0);
    CHECK(rerank_select_count(1, 0.1) == 1);  // never empty when evidence exists
    CHECK(rerank_select_count(10, 1.0) == 10);
}

TEST_CASE("retry fires iff deduplicated hits fall below the threshold") {
    RetrievalConfig cfg;
    cfg.top_k = 30;  // cap not binding in the first pass

    // 24 matching chapters: 24 < 25 so the retry fires.
    const auto g24 = alpha_graph(24);
    const auto ctx24 = retrieve("alpha", g24, cfg);
    CHECK(ctx24.retried);

    // Exactly 25: boundary stays on the no-retry side.
    const auto g25 = alpha_graph(25);
    const auto ctx25 = retrieve("alpha", g25, cfg);
    CHECK_FALSE(ctx25.retried);
    CHECK(ctx25.total_candidates == 25);
}

TEST_CASE("retry doubles the per-query depth") {
    RetrievalConfig cfg;
    cfg.top_k = 20;
    const auto g = alpha_graph(50);
    const auto ctx = retrieve("alpha", g, cfg);
    CHECK(ctx.retried);
    // First pass returns top_k hits; the doubled second pass reaches 40.
    CHECK(ctx.total_candidates == 40);
}

TEST_CASE("all-zero scores yield the empty-context fallback signal") {
    const auto g = load_mini_graph();
    const RetrievalConfig cfg;
    const auto ctx = retrieve("zzz unknown token", g, cfg);
    CHECK(ctx.text.empty());
    CHECK(ctx.records.empty());
    CHECK(ctx.retried);  // sparse hits always trigger the retry first
}

TEST_CASE("retrieve output is deterministic and capped") {
    const auto g = load_mini_graph();
    RetrievalConfig cfg;
    cfg.context_cap_chars = 120;

    const auto a = retrieve("SaboDamの安定計算と土石流対策", g, cfg, 1);
    const auto b = retrieve("SaboDamの安定計算と土石流対策", g, cfg, 4);
    CHECK(a.text == b.text);
    CHECK(a.records.size() == b.records.size());
    CHECK(codepoint_count(a.text) <= 120);

    // Included records are ordered by (score desc, node ids asc) and all
    // score at least as high as anything excluded.
    for (std::size_t i = 1; i < a.records.size(); ++i) {
        CHECK(a.records[i - 1].final_score >= a.records[i].final_score);
        if (a.records[i - 1].final_score == a.records[i].final_score) {
            CHECK(a.records[i - 1].node_ids < a.records[i].node_ids);
        }
    }
    for (const auto& r : a.records) CHECK(r.final_score > 0.0);
}

TEST_CASE("retrieve_batch equals the serial reference at any worker count") {
    const auto g = load_mini_graph();
    const RetrievalConfig cfg;
    const std::vector<std::string> questions = {
        "SaboDamの安定計算について",
        "堤防の点検頻度",
        "土石流への対策",
        "設計と維持管理の流れ",
    };
    const auto reference = retrieve_batch_reference(questions, g, cfg);
    for (int workers : {1, 4}) {
        const auto batch = retrieve_batch(questions, g, cfg, workers);
        REQUIRE(batch.size() == reference.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            CHECK(batch[i].text == reference[i].text);
            CHECK(batch[i].retried == reference[i].retried);
            CHECK(batch[i].total_candidates == reference[i].total_candidates);
        }
    }
}

TEST_CASE("retrieval config reads environment overrides") {
    ::setenv("GRAPH_TOP_K", "7", 1);
    ::setenv("GRAPH_RERANK_RATIO", "0.5", 1);
    ::setenv("GRAPH_CONTEXT_CAP", "900", 1);
    ::setenv("GRAPH_RETRY_THRESHOLD", "11", 1);
    const auto cfg = RetrievalConfig::from_env();
    CHECK(cfg.top_k == 7);
    CHECK(cfg.rerank_ratio == 0.5);
    CHECK(cfg.context_cap_chars == 900);
    CHECK(cfg.retry_threshold == 11);
    ::unsetenv("GRAPH_TOP_K");
    ::unsetenv("GRAPH_RERANK_RATIO");
    ::unsetenv("GRAPH_CONTEXT_CAP");
    ::unsetenv("GRAPH_RETRY_THRESHOLD");

    const auto defaults = RetrievalConfig::from_env();
    CHECK(defaults.top_k == 20);
    CHECK(defaults.rerank_ratio == 0.8);
    CHECK(defaults.context_cap_chars == 2000);
    CHECK(defaults.retry_threshold == 25);

    ::setenv("GRAPH_TOP_K", "abc", 1);
    CHECK_THROWS_AS(RetrievalConfig::from_env(), std::invalid_argument);
    ::unsetenv("GRAPH_TOP_K");
}
