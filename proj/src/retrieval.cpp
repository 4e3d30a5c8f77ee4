#include "graphqa/retrieval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <set>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "graphqa/text.hpp"

namespace graphqa {

namespace {

constexpr std::array<std::string_view, 6> kQueryKindNames = {
    "Fulltext",         "FacilityContext",    "HazardFacilityMap",
    "MaintenanceCycle", "FacilityComparison", "BroadSection",
};

bool node_matches_keywords(const Node& node, const KeywordSet& kw) {
    const std::string name = fold_lower(node.name);
    std::vector<std::string> aliases;
    for (auto& a : node.aliases()) aliases.push_back(fold_lower(a));
    for (const auto& k : kw.keywords) {
        const std::string fk = fold_lower(k);
        if (name.find(fk) != std::string::npos) return true;
        for (const auto& a : aliases) {
            if (a.find(fk) != std::string::npos) return true;
        }
    }
    return false;
}

// Keyword-matched nodes of one kind, id ascending.
std::vector<const Node*> matched_nodes(const KnowledgeGraph& g, NodeKind kind,
                                       const KeywordSet& kw) {
    std::vector<const Node*> out;
    for (const auto& [id, node] : g.nodes()) {
        if (node.kind == kind && node_matches_keywords(node, kw)) out.push_back(&node);
    }
    return out;
}

// Single-node line; structural nodes render their hierarchy path.
std::string render_single(const KnowledgeGraph& g, const Node& n) {
    std::string line;
    if (is_structural(n.kind)) {
        const auto path = g.hierarchy_path(n.id);
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) line += " / ";
            line += path[i]->name;
        }
    } else {
        line = n.name;
    }
    if (!n.description.empty()) {
        line += ": ";
        line += n.description;
    }
    return line;
}

std::string render_chain(const std::vector<const Node*>& nodes,
                         const std::vector<RelationKind>& rels) {
    std::string line = nodes[0]->name;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        line += " -[";
        line += to_string(rels[i]);
        line += "]-> ";
        line += nodes[i + 1]->name;
    }
    const std::string& desc = nodes.back()->description.empty()
                                  ? nodes.front()->description
                                  : nodes.back()->description;
    if (!desc.empty()) {
        line += ": ";
        line += desc;
    }
    return line;
}

RetrievalRecord make_chain_record(QueryKind kind, const std::vector<const Node*>& nodes,
                                  std::vector<RelationKind> rels) {
    RetrievalRecord r;
    r.query_kind = kind;
    for (const Node* n : nodes) r.node_ids.push_back(n->id);
    r.rendered = render_chain(nodes, rels);
    r.relations = std::move(rels);
    return r;
}

void cap_records(std::vector<RetrievalRecord>& records, int k) {
    if (k >= 0 && records.size() > static_cast<std::size_t>(k)) {
        records.resize(static_cast<std::size_t>(k));
    }
}

// (1) Fulltext over the joined keywords.
std::vector<RetrievalRecord> query_fulltext(const KeywordSet& kw,
                                            const KnowledgeGraph& g, int k) {
    std::vector<RetrievalRecord> out;
    std::string joined;
    for (const auto& w : kw.keywords) {
        if (!joined.empty()) joined += " ";
        joined += w;
    }
    if (analyze_tokens(joined).empty()) return out;
    for (const auto& hit : g.fulltext_search(joined, static_cast<std::size_t>(k))) {
        const Node& n = g.at(hit.doc_id);
        RetrievalRecord r;
        r.query_kind = QueryKind::Fulltext;
        r.node_ids = {n.id};
        r.rendered = render_single(g, n);
        r.engine_score = hit.score;
        out.push_back(std::move(r));
    }
    return out;
}

// (2) Facility context: keyword-matched facilities, their rule locations and
// required techniques, expanded one more hop into sections and definition
// locations.
std::vector<RetrievalRecord> query_facility_context(const KeywordSet& kw,
                                                    const KnowledgeGraph& g, int k) {
    std::vector<RetrievalRecord> out;
    for (const Node* fac : matched_nodes(g, NodeKind::FacilityType, kw)) {
        for (std::size_t idx : g.out_edges(fac->id)) {
            const Edge& e = g.edges()[idx];
            if (e.rel == RelationKind::DESCRIBED_IN) {
                const Node& loc = g.at(e.dst);
                out.push_back(make_chain_record(QueryKind::FacilityContext, {fac, &loc},
                                                {e.rel}));
                for (std::size_t idx2 : g.out_edges(loc.id)) {
                    const Edge& e2 = g.edges()[idx2];
                    if (e2.rel != RelationKind::HAS_SECTION) continue;
                    const Node& sec = g.at(e2.dst);
                    out.push_back(make_chain_record(QueryKind::FacilityContext,
                                                    {fac, &loc, &sec}, {e.rel, e2.rel}));
                }
            } else if (e.rel == RelationKind::REQUIRES) {
                const Node& tech = g.at(e.dst);
                out.push_back(make_chain_record(QueryKind::FacilityContext, {fac, &tech},
                                                {e.rel}));
                for (std::size_t idx2 : g.out_edges(tech.id)) {
                    const Edge& e2 = g.edges()[idx2];
                    if (e2.rel != RelationKind::DEFINED_IN) continue;
                    const Node& loc = g.at(e2.dst);
                    out.push_back(make_chain_record(QueryKind::FacilityContext,
                                                    {fac, &tech, &loc}, {e.rel, e2.rel}));
                }
            }
        }
    }
    cap_records(out, k);
    return out;
}

// (3) Hazard-facility map: hazard -> exposed/affected facilities -> rule
// locations.
std::vector<RetrievalRecord> query_hazard_facility(const KeywordSet& kw,
                                                   const KnowledgeGraph& g, int k) {
    std::vector<RetrievalRecord> out;
    for (const Node* haz : matched_nodes(g, NodeKind::HazardType, kw)) {
        // (facility, relation linking it to the hazard), id ascending.
        std::vector<std::pair<const Node*, RelationKind>> facilities;
        for (std::size_t idx : g.in_edges(haz->id)) {
            const Edge& e = g.edges()[idx];
            if (e.rel == RelationKind::SUBJECT_TO) {
                facilities.emplace_back(&g.at(e.src), e.rel);
            }
        }
        for (std::size_t idx : g.out_edges(haz->id)) {
            const Edge& e = g.edges()[idx];
            if (e.rel == RelationKind::AFFECTS) {
                facilities.emplace_back(&g.at(e.dst), e.rel);
            }
        }
        std::sort(facilities.begin(), facilities.end(),
                  [](const auto& a, const auto& b) {
                      if (a.first->id != b.first->id) return a.first->id < b.first->id;
                      return a.second < b.second;
                  });
        for (const auto& [fac, rel] : facilities) {
            out.push_back(make_chain_record(QueryKind::HazardFacilityMap, {haz, fac},
                                            {rel}));
            for (std::size_t idx : g.out_edges(fac->id)) {
                const Edge& e = g.edges()[idx];
                if (e.rel != RelationKind::DESCRIBED_IN) continue;
                const Node& loc = g.at(e.dst);
                out.push_back(make_chain_record(QueryKind::HazardFacilityMap,
                                                {haz, fac, &loc}, {rel, e.rel}));
            }
        }
    }
    cap_records(out, k);
    return out;
}

// (4) Maintenance cycle: the full PRECEDES chain through each keyword-matched
// process concept. The chain is expanded to its root first so a match in the
// middle of a cycle still surfaces the whole process order. Branches resolve
// to the smallest node id; cycles terminate at the first repeated node.
std::vector<RetrievalRecord> query_maintenance_cycle(const KeywordSet& kw,
                                                     const KnowledgeGraph& g, int k) {
    std::vector<RetrievalRecord> out;
    constexpr std::size_t kMaxChain = 8;
    for (const Node* proc : matched_nodes(g, NodeKind::ProcessConcept, kw)) {
        std::set<std::string> visited{proc->id};
        const Node* root = proc;
        for (std::size_t step = 0; step < kMaxChain; ++step) {
            const Node* pred = nullptr;
            for (std::size_t idx : g.in_edges(root->id)) {
                const Edge& e = g.edges()[idx];
                if (e.rel != RelationKind::PRECEDES) continue;
                if (visited.count(e.src)) continue;
                if (!pred || e.src < pred->id) pred = &g.at(e.src);
            }
            if (!pred) break;
            visited.insert(pred->id);
            root = pred;
        }

        std::vector<const Node*> chain{root};
        std::set<std::string> seen{root->id};
        while (chain.size() < kMaxChain) {
            const Node* next = nullptr;
            for (std::size_t idx : g.out_edges(chain.back()->id)) {
                const Edge& e = g.edges()[idx];
                if (e.rel != RelationKind::PRECEDES) continue;
                if (seen.count(e.dst)) continue;
                if (!next || e.dst < next->id) next = &g.at(e.dst);
            }
            if (!next) break;
            seen.insert(next->id);
            chain.push_back(next);
        }

        std::vector<RelationKind> rels(chain.size() > 0 ? chain.size() - 1 : 0,
                                       RelationKind::PRECEDES);
        out.push_back(make_chain_record(QueryKind::MaintenanceCycle, chain,
                                        std::move(rels)));
    }
    cap_records(out, k);
    return out;
}

// (5) Facility comparison: pairs of keyword-matched facilities with a shared
// neighbor under any relation, in either direction.
std::vector<RetrievalRecord> query_facility_comparison(const KeywordSet& kw,
                                                       const KnowledgeGraph& g, int k) {
    std::vector<RetrievalRecord> out;
    const auto facilities = matched_nodes(g, NodeKind::FacilityType, kw);
    if (facilities.size() < 2) return out;

    auto neighbors = [&](const Node* f) {
        // neighbor id -> smallest relation connecting it to f.
        std::map<std::string, RelationKind> n;
        for (std::size_t idx : g.out_edges(f->id)) {
            const Edge& e = g.edges()[idx];
            auto it = n.find(e.dst);
            if (it == n.end() || e.rel < it->second) n[e.dst] = e.rel;
        }
        for (std::size_t idx : g.in_edges(f->id)) {
            const Edge& e = g.edges()[idx];
            auto it = n.find(e.src);
            if (it == n.end() || e.rel < it->second) n[e.src] = e.rel;
        }
        return n;
    };

    for (std::size_t i = 0; i < facilities.size(); ++i) {
        const auto ni = neighbors(facilities[i]);
        for (std::size_t j = i + 1; j < facilities.size(); ++j) {
            const auto nj = neighbors(facilities[j]);
            for (const auto& [id, rel_i] : ni) {
                auto it = nj.find(id);
                if (it == nj.end()) continue;
                const Node& shared = g.at(id);
                RetrievalRecord r;
                r.query_kind = QueryKind::FacilityComparison;
                r.node_ids = {facilities[i]->id, facilities[j]->id, shared.id};
                r.relations = {rel_i, it->second};
                r.rendered = facilities[i]->name + " & " + facilities[j]->name +
                             " -> " + shared.name + " [" +
                             std::string(to_string(rel_i)) + "/" +
                             std::string(to_string(it->second)) + "]";
                if (!shared.description.empty()) {
                    r.rendered += ": " + shared.description;
                }
                out.push_back(std::move(r));
            }
        }
    }
    cap_records(out, k);
    return out;
}

}  // namespace

std::string_view to_string(QueryKind kind) {
    return kQueryKindNames[static_cast<std::size_t>(kind)];
}

std::string RetrievalRecord::dedup_key() const {
    std::vector<std::string> ids = node_ids;
    std::sort(ids.begin(), ids.end());
    std::vector<std::string> rels;
    for (RelationKind r : relations) rels.emplace_back(to_string(r));
    std::sort(rels.begin(), rels.end());
    std::string key;
    for (const auto& id : ids) {
        key += id;
        key += '\x1f';
    }
    key += '|';
    for (const auto& r : rels) {
        key += r;
        key += '\x1f';
    }
    return key;
}

RetrievalConfig RetrievalConfig::from_env() {
    RetrievalConfig cfg;
    auto read_int = [](const char* name, int& slot) {
        if (const char* v = std::getenv(name)) {
            try {
                slot = std::stoi(v);
            } catch (const std::exception&) {
                throw std::invalid_argument(std::string(name) + ": invalid integer '" +
                                            v + "'");
            }
        }
    };
    read_int("GRAPH_TOP_K", cfg.top_k);
    read_int("GRAPH_CONTEXT_CAP", cfg.context_cap_chars);
    read_int("GRAPH_RETRY_THRESHOLD", cfg.retry_threshold);
    if (const char* v = std::getenv("GRAPH_RERANK_RATIO")) {
        try {
            cfg.rerank_ratio = std::stod(v);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("GRAPH_RERANK_RATIO: invalid real '") +
                                        v + "'");
        }
    }
    return cfg;
}

KeywordSet extract_keywords(std::string_view question, const KnowledgeGraph& graph) {
    bool all_space = true;
    for (char c : question) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
            all_space = false;
            break;
        }
    }
    if (question.empty() || all_space) {
        throw std::invalid_argument("question is empty");
    }

    KeywordSet out;
    out.source_question = std::string(question);

    const auto cps = utf8_decode(question);
    std::vector<char32_t> folded = cps;
    for (auto& c : folded) {
        if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
    }

    // Dictionary surfaces grouped by first code point, longest first.
    std::map<char32_t, std::vector<std::vector<char32_t>>> by_first;
    for (const auto& [surface, ids] : graph.name_index()) {
        auto scps = utf8_decode(surface);
        if (scps.empty()) continue;
        by_first[scps[0]].push_back(std::move(scps));
    }
    for (auto& [first, surfaces] : by_first) {
        std::sort(surfaces.begin(), surfaces.end(),
                  [](const auto& a, const auto& b) {
                      if (a.size() != b.size()) return a.size() > b.size();
                      return a < b;
                  });
    }

    std::set<std::string> seen;
    std::size_t i = 0;
    while (i < folded.size()) {
        const auto bucket = by_first.find(folded[i]);
        std::size_t matched_len = 0;
        if (bucket != by_first.end()) {
            for (const auto& surface : bucket->second) {
                if (surface.size() > folded.size() - i) continue;
                if (std::equal(surface.begin(), surface.end(), folded.begin() + i)) {
                    matched_len = surface.size();
                    break;
                }
            }
        }
        if (matched_len > 0) {
            // Emit the question's own surface form for the match.
            std::string word;
            for (std::size_t k = i; k < i + matched_len; ++k) utf8_append(word, cps[k]);
            if (seen.insert(fold_lower(word)).second) out.keywords.push_back(word);
            i += matched_len;
        } else {
            ++i;
        }
    }

    if (out.keywords.empty()) out.keywords = fallback_tokens(question);
    return out;
}

std::vector<RetrievalRecord> run_fanout(const KeywordSet& keywords,
                                        const KnowledgeGraph& graph,
                                        const RetrievalConfig& cfg, int k, int workers) {
    (void)cfg;
    using SubQuery = std::vector<RetrievalRecord> (*)(const KeywordSet&,
                                                      const KnowledgeGraph&, int);
    constexpr std::array<SubQuery, 5> kSubQueries = {
        query_fulltext,          query_facility_context, query_hazard_facility,
        query_maintenance_cycle, query_facility_comparison,
    };

    std::array<std::vector<RetrievalRecord>, 5> slots;
    std::array<std::exception_ptr, 5> errors{};

#ifdef _OPENMP
#pragma omp parallel for num_threads(std::clamp(workers, 1, 5)) schedule(static) \
    if (workers > 1)
#endif
    for (int i = 0; i < 5; ++i) {
        try {
            slots[static_cast<std::size_t>(i)] =
                kSubQueries[static_cast<std::size_t>(i)](keywords, graph, k);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    std::vector<RetrievalRecord> out;
    for (auto& slot : slots) {
        out.insert(out.end(), std::make_move_iterator(slot.begin()),
                   std::make_move_iterator(slot.end()));
    }
    return out;
}

std::vector<RetrievalRecord> broad_section_query(const KeywordSet& keywords,
                                                 const KnowledgeGraph& graph, int k) {
    std::vector<RetrievalRecord> out;
    std::set<std::string> emitted;
    for (const auto& kw : keywords.keywords) {
        const std::string fk = fold_lower(kw);
        for (const auto& [id, node] : graph.nodes()) {
            if (node.kind != NodeKind::Chapter && node.kind != NodeKind::Section &&
                node.kind != NodeKind::TechnicalConcept) {
                continue;
            }
            if (fold_lower(node.name).find(fk) == std::string::npos) continue;
            if (!emitted.insert(id).second) continue;
            RetrievalRecord r;
            r.query_kind = QueryKind::BroadSection;
            r.node_ids = {id};
            r.rendered = render_single(graph, node);
            out.push_back(std::move(r));
        }
    }
    cap_records(out, k);
    return out;
}

std::vector<RetrievalRecord> dedup_records(std::vector<RetrievalRecord> records) {
    std::vector<RetrievalRecord> out;
    std::map<std::string, std::size_t> by_key;
    for (auto& r : records) {
        const std::string key = r.dedup_key();
        auto it = by_key.find(key);
        if (it == by_key.end()) {
            by_key.emplace(key, out.size());
            out.push_back(std::move(r));
        } else if (r.final_score > out[it->second].final_score) {
            out[it->second] = std::move(r);
        }
    }
    return out;
}

void score_records(std::vector<RetrievalRecord>& records, const KeywordSet& keywords,
                   const KnowledgeGraph* graph) {
    for (auto& r : records) {
        std::string haystack = fold_lower(r.rendered);
        if (graph) {
            for (const auto& id : r.node_ids) {
                if (const Node* n = graph->find(id)) {
                    haystack += '\n';
                    haystack += fold_lower(n->name);
                }
            }
        }
        int matches = 0;
        for (const auto& kw : keywords.keywords) {
            if (haystack.find(fold_lower(kw)) != std::string::npos) ++matches;
        }
        r.match_count = matches;
        r.final_score = r.query_kind == QueryKind::Fulltext
                            ? r.engine_score * 10.0
                            : static_cast<double>(r.match_count);
    }
}

std::size_t rerank_select_count(std::size_t positive_count, double ratio) {
    if (positive_count == 0) return 0;
    const double raw = ratio * static_cast<double>(positive_count);
    auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (n < 1) n = 1;
    if (n > positive_count) n = positive_count;
    return n;
}

namespace {

// Total order for final context assembly: score desc, node ids asc, then
// query kind and rendered text to make the comparator total.
bool record_order(const RetrievalRecord& a, const RetrievalRecord& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.node_ids != b.node_ids) return a.node_ids < b.node_ids;
    if (a.query_kind != b.query_kind) return a.query_kind < b.query_kind;
    return a.rendered < b.rendered;
}

}  // namespace

RankedContext retrieve(std::string_view question, const KnowledgeGraph& graph,
                       const RetrievalConfig& cfg, int workers) {
    const KeywordSet kw = extract_keywords(question, graph);

    std::vector<RetrievalRecord> records = run_fanout(kw, graph, cfg, cfg.top_k, workers);
    score_records(records, kw, &graph);
    records = dedup_records(std::move(records));

    RankedContext ctx;
    int retries = 0;
    while (static_cast<int>(records.size()) < cfg.retry_threshold &&
           retries < cfg.max_retries) {
        ++retries;
        ctx.retried = true;
        const int doubled = cfg.top_k * 2;
        std::vector<RetrievalRecord> merged = std::move(records);
        auto second = run_fanout(kw, graph, cfg, doubled, workers);
        merged.insert(merged.end(), std::make_move_iterator(second.begin()),
                      std::make_move_iterator(second.end()));
        auto broad = broad_section_query(kw, graph, doubled);
        merged.insert(merged.end(), std::make_move_iterator(broad.begin()),
                      std::make_move_iterator(broad.end()));
        score_records(merged, kw, &graph);
        records = dedup_records(std::move(merged));
    }

    ctx.total_candidates = static_cast<int>(records.size());

    std::vector<RetrievalRecord> positive;
    for (auto& r : records) {
        if (r.final_score > 0.0) positive.push_back(std::move(r));
    }
    std::sort(positive.begin(), positive.end(), record_order);

    const std::size_t take = rerank_select_count(positive.size(), cfg.rerank_ratio);
    positive.resize(take);
    ctx.records = std::move(positive);

    std::string text;
    for (const auto& r : ctx.records) {
        if (!text.empty()) text += '\n';
        text += r.rendered;
    }
    ctx.text = truncate_codepoints(text, static_cast<std::size_t>(cfg.context_cap_chars));
    return ctx;
}

std::vector<RankedContext> retrieve_batch(const std::vector<std::string>& questions,
                                          const KnowledgeGraph& graph,
                                          const RetrievalConfig& cfg, int workers) {
    std::vector<RankedContext> out(questions.size());
    std::vector<std::exception_ptr> errors(questions.size());

    const auto n = static_cast<long>(questions.size());
#ifdef _OPENMP
#pragma omp parallel for num_threads(std::max(workers, 1)) schedule(dynamic) \
    if (workers > 1)
#endif
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                retrieve(questions[static_cast<std::size_t>(i)], graph, cfg, 1);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return out;
}

std::vector<RankedContext> retrieve_batch_reference(
    const std::vector<std::string>& questions, const KnowledgeGraph& graph,
    const RetrievalConfig& cfg) {
    std::vector<RankedContext> out;
    out.reserve(questions.size());
    for (const auto& q : questions) out.push_back(retrieve(q, graph, cfg, 1));
    return out;
}

}  // namespace graphqa
