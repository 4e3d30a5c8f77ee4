#include "graphqa/graph.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graphqa/csv.hpp"
#include "graphqa/text.hpp"

namespace graphqa {

namespace {

struct PendingNode {
    Node node;
    std::string file;
    std::size_t line = 0;
    std::string parent_id;  // hierarchy file only
};

void check_header(const std::string& file, const CsvTable& table,
                  const std::vector<std::string>& expected) {
    if (table.header != expected) {
        std::string want;
        for (const auto& c : expected) {
            if (!want.empty()) want += ",";
            want += c;
        }
        throw LoadError(file, 1, "expected header '" + want + "'");
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), 0, "cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Upserts a node row; repeated ids merge last-writer-wins per property. A
// kind change across rows is a load error, not a merge.
void upsert(std::map<std::string, PendingNode>& pending, PendingNode&& row) {
    if (row.node.id.empty()) {
        throw LoadError(row.file, row.line, "empty node id");
    }
    if (row.node.name.empty()) {
        throw LoadError(row.file, row.line,
                        "node '" + row.node.id + "' has empty name");
    }
    auto it = pending.find(row.node.id);
    if (it == pending.end()) {
        pending.emplace(row.node.id, std::move(row));
        return;
    }
    PendingNode& cur = it->second;
    if (cur.node.kind != row.node.kind) {
        throw LoadError(row.file, row.line,
                        "node '" + row.node.id + "' redeclared as " +
                            std::string(to_string(row.node.kind)) + " (was " +
                            std::string(to_string(cur.node.kind)) + ")");
    }
    cur.node.name = row.node.name;
    cur.node.description = row.node.description;
    for (auto& [k, v] : row.node.extra) cur.node.extra[k] = v;
    cur.parent_id = row.parent_id;
    cur.file = row.file;
    cur.line = row.line;
}

}  // namespace

KnowledgeGraph KnowledgeGraph::load_bundle_strings(
    const std::map<std::string, std::string>& files) {
    auto content_of = [&](std::string_view name) -> const std::string& {
        auto it = files.find(std::string(name));
        if (it == files.end()) {
            throw LoadError(std::string(name), 0, "bundle file missing");
        }
        return it->second;
    };

    std::map<std::string, PendingNode> pending;

    // nodes_standard.csv: id,name,description
    {
        const std::string file(kStandardsFile);
        CsvTable t = parse_csv(file, content_of(kStandardsFile));
        check_header(file, t, {"id", "name", "description"});
        for (const auto& row : t.rows) {
            PendingNode p;
            p.node = Node{row.fields[0], NodeKind::Standard, row.fields[1], row.fields[2], {}};
            p.file = file;
            p.line = row.line;
            upsert(pending, std::move(p));
        }
    }

    // nodes_chapter_section_item.csv: id,kind,name,description,parent_id
    {
        const std::string file(kHierarchyFile);
        CsvTable t = parse_csv(file, content_of(kHierarchyFile));
        check_header(file, t, {"id", "kind", "name", "description", "parent_id"});
        for (const auto& row : t.rows) {
            auto kind = parse_node_kind(row.fields[1]);
            if (!kind || (*kind != NodeKind::Chapter && *kind != NodeKind::Section &&
                          *kind != NodeKind::Item)) {
                throw LoadError(file, row.line,
                                "unknown hierarchy node kind '" + row.fields[1] + "'");
            }
            PendingNode p;
            p.node = Node{row.fields[0], *kind, row.fields[2], row.fields[3], {}};
            p.file = file;
            p.line = row.line;
            p.parent_id = row.fields[4];
            upsert(pending, std::move(p));
        }
    }

    // nodes_domain.csv: id,kind,name,description,aliases
    {
        const std::string file(kDomainFile);
        CsvTable t = parse_csv(file, content_of(kDomainFile));
        check_header(file, t, {"id", "kind", "name", "description", "aliases"});
        for (const auto& row : t.rows) {
            auto kind = parse_node_kind(row.fields[1]);
            if (!kind || is_structural(*kind)) {
                throw LoadError(file, row.line,
                                "unknown domain node kind '" + row.fields[1] + "'");
            }
            PendingNode p;
            p.node = Node{row.fields[0], *kind, row.fields[2], row.fields[3], {}};
            if (!row.fields[4].empty()) p.node.extra["aliases"] = row.fields[4];
            p.file = file;
            p.line = row.line;
            upsert(pending, std::move(p));
        }
    }

    KnowledgeGraph g;
    for (auto& [id, p] : pending) g.nodes_.emplace(id, std::move(p.node));

    auto kind_of = [&](const std::string& id, const std::string& file,
                       std::size_t line) -> NodeKind {
        auto it = g.nodes_.find(id);
        if (it == g.nodes_.end()) {
            throw LoadError(file, line, "unknown node id '" + id + "'");
        }
        return it->second.kind;
    };

    std::set<Edge> edge_set;

    auto add_edge = [&](Edge e, const std::string& file, std::size_t line) {
        const NodeKind src_kind = kind_of(e.src, file, line);
        const NodeKind dst_kind = kind_of(e.dst, file, line);
        if (!relation_allows(e.rel, src_kind, dst_kind)) {
            throw LoadError(file, line,
                            std::string(to_string(e.rel)) + " does not allow " +
                                std::string(to_string(src_kind)) + " -> " +
                                std::string(to_string(dst_kind)) + " ('" + e.src +
                                "' -> '" + e.dst + "')");
        }
        edge_set.insert(std::move(e));
    };

    // Structural edges implied by parent_id, typed by the child's kind.
    for (const auto& [id, p] : pending) {
        if (p.parent_id.empty()) continue;
        RelationKind rel;
        switch (p.node.kind) {
            case NodeKind::Chapter: rel = RelationKind::HAS_CHAPTER; break;
            case NodeKind::Section: rel = RelationKind::HAS_SECTION; break;
            case NodeKind::Item: rel = RelationKind::HAS_ITEM; break;
            default: continue;
        }
        add_edge(Edge{p.parent_id, rel, id}, p.file, p.line);
    }

    // relations.csv: src,rel,dst
    {
        const std::string file(kRelationsFile);
        CsvTable t = parse_csv(file, content_of(kRelationsFile));
        check_header(file, t, {"src", "rel", "dst"});
        for (const auto& row : t.rows) {
            auto rel = parse_relation_kind(row.fields[1]);
            if (!rel) {
                throw LoadError(file, row.line,
                                "unknown relation kind '" + row.fields[1] + "'");
            }
            add_edge(Edge{row.fields[0], *rel, row.fields[2]}, file, row.line);
        }
    }

    g.edges_.assign(edge_set.begin(), edge_set.end());

    // Hierarchy validation: every Chapter/Section/Item has exactly one
    // structural parent, and the structural subgraph is acyclic.
    {
        std::map<std::string, std::size_t> parent_count;
        for (const auto& e : g.edges_) {
            if (is_structural(e.rel)) ++parent_count[e.dst];
        }
        for (const auto& [id, p] : pending) {
            if (p.node.kind == NodeKind::Standard || is_structural(p.node.kind) == false) {
                continue;
            }
            const auto it = parent_count.find(id);
            const std::size_t c = it == parent_count.end() ? 0 : it->second;
            if (c == 0) {
                throw LoadError(p.file, p.line,
                                "orphan structural node '" + id +
                                    "' is not reachable from any Standard");
            }
            if (c > 1) {
                throw LoadError(p.file, p.line,
                                "structural node '" + id + "' has " +
                                    std::to_string(c) + " parents");
            }
        }

        // Kahn over structural edges. Unreachable while the per-edge kind
        // constraints hold (the hierarchy kinds strictly descend), kept as a
        // direct check of the invariant.
        std::map<std::string, std::size_t> indeg;
        std::map<std::string, std::vector<std::string>> adj;
        std::size_t structural_edges = 0;
        for (const auto& e : g.edges_) {
            if (!is_structural(e.rel)) continue;
            ++structural_edges;
            ++indeg[e.dst];
            indeg.emplace(e.src, 0);
            adj[e.src].push_back(e.dst);
        }
        std::vector<std::string> queue;
        for (const auto& [id, d] : indeg) {
            if (d == 0) queue.push_back(id);
        }
        std::size_t visited_edges = 0;
        while (!queue.empty()) {
            const std::string id = queue.back();
            queue.pop_back();
            for (const auto& nxt : adj[id]) {
                ++visited_edges;
                if (--indeg[nxt] == 0) queue.push_back(nxt);
            }
        }
        if (visited_edges != structural_edges) {
            throw LoadError(std::string(kRelationsFile), 0,
                            "structural hierarchy contains a cycle");
        }
    }

    // Adjacency over canonical edge order.
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
        g.out_[g.edges_[i].src].push_back(i);
        g.in_[g.edges_[i].dst].push_back(i);
    }

    // Name/alias dictionary, case-folded.
    for (const auto& [id, node] : g.nodes_) {
        std::vector<std::string> surfaces = {node.name};
        for (auto& a : node.aliases()) surfaces.push_back(a);
        for (const auto& s : surfaces) {
            auto& ids = g.name_index_[fold_lower(s)];
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        }
    }
    for (auto& [surface, ids] : g.name_index_) std::sort(ids.begin(), ids.end());

    // Fulltext index: name carries double weight by field duplication.
    for (const auto& [id, node] : g.nodes_) {
        auto tokens = analyze_tokens(node.name);
        auto twice = tokens;
        twice.insert(twice.end(), tokens.begin(), tokens.end());
        auto desc = analyze_tokens(node.description);
        twice.insert(twice.end(), desc.begin(), desc.end());
        g.fulltext_.add_document(id, twice);
    }
    g.fulltext_.finalize();

    return g;
}

KnowledgeGraph KnowledgeGraph::load_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, std::string> files;
    for (std::string_view name :
         {kStandardsFile, kHierarchyFile, kDomainFile, kRelationsFile}) {
        files[std::string(name)] = read_text_file(fs::path(dir) / name);
    }
    return load_bundle_strings(files);
}

const Node* KnowledgeGraph::find(std::string_view id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const Node& KnowledgeGraph::at(std::string_view id) const {
    const Node* n = find(id);
    if (!n) throw std::out_of_range("unknown node id '" + std::string(id) + "'");
    return *n;
}

std::map<std::string, std::size_t> KnowledgeGraph::node_counts_by_kind() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& [id, n] : nodes_) ++counts[std::string(to_string(n.kind))];
    return counts;
}

std::map<std::string, std::size_t> KnowledgeGraph::edge_counts_by_relation() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : edges_) ++counts[std::string(to_string(e.rel))];
    return counts;
}

std::span<const std::size_t> KnowledgeGraph::out_edges(std::string_view id) const {
    auto it = out_.find(id);
    if (it == out_.end()) return {};
    return it->second;
}

std::span<const std::size_t> KnowledgeGraph::in_edges(std::string_view id) const {
    auto it = in_.find(id);
    if (it == in_.end()) return {};
    return it->second;
}

std::vector<PathHit> KnowledgeGraph::typed_neighbors(
    std::string_view id, std::span<const TraversalStep> steps) const {
    const Node& start = at(id);
    if (steps.empty() || steps.size() > 2) {
        throw std::invalid_argument("typed_neighbors supports 1 or 2 steps");
    }

    std::vector<PathHit> frontier{PathHit{{&start}}};
    for (const TraversalStep& step : steps) {
        std::vector<PathHit> next;
        for (const PathHit& hit : frontier) {
            const Node* tail = hit.path.back();
            const auto idxs = step.dir == Direction::Out ? out_edges(tail->id)
                                                         : in_edges(tail->id);
            for (std::size_t idx : idxs) {
                const Edge& e = edges_[idx];
                if (e.rel != step.rel) continue;
                const std::string& other_id =
                    step.dir == Direction::Out ? e.dst : e.src;
                const Node* other = find(other_id);
                // Simple paths only.
                bool seen = false;
                for (const Node* n : hit.path) {
                    if (n == other) seen = true;
                }
                if (seen) continue;
                PathHit extended = hit;
                extended.path.push_back(other);
                next.push_back(std::move(extended));
            }
        }
        frontier = std::move(next);
    }

    std::sort(frontier.begin(), frontier.end(), [](const PathHit& a, const PathHit& b) {
        return std::lexicographical_compare(
            a.path.begin(), a.path.end(), b.path.begin(), b.path.end(),
            [](const Node* x, const Node* y) { return x->id < y->id; });
    });
    return frontier;
}

std::vector<PathHit> KnowledgeGraph::typed_neighbors(std::string_view id,
                                                     RelationKind rel, Direction dir,
                                                     int depth) const {
    if (depth < 1 || depth > 2) {
        throw std::invalid_argument("depth must be 1 or 2");
    }
    std::vector<TraversalStep> steps(static_cast<std::size_t>(depth),
                                     TraversalStep{rel, dir});
    return typed_neighbors(id, steps);
}

std::vector<FulltextIndex::Hit> KnowledgeGraph::fulltext_search(std::string_view query,
                                                                std::size_t k) const {
    return fulltext_.search(query, k);
}

std::vector<const Node*> KnowledgeGraph::hierarchy_path(std::string_view id) const {
    const Node* node = &at(id);
    if (!is_structural(node->kind)) {
        throw std::invalid_argument("node '" + std::string(id) + "' is not structural");
    }
    std::vector<const Node*> path{node};
    while (path.back()->kind != NodeKind::Standard) {
        const Node* cur = path.back();
        const Node* parent = nullptr;
        for (std::size_t idx : in_edges(cur->id)) {
            const Edge& e = edges_[idx];
            if (is_structural(e.rel)) {
                parent = find(e.src);
                break;
            }
        }
        if (!parent) {
            // Unreachable: orphans are rejected at load.
            throw std::logic_error("structural node '" + cur->id + "' has no parent");
        }
        path.push_back(parent);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::string KnowledgeGraph::serialize() const {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& [id, n] : nodes_) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["kind"] = std::string(to_string(n.kind));
        jn["name"] = n.name;
        jn["description"] = n.description;
        jn["extra"] = n.extra;
        j["nodes"].push_back(std::move(jn));
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& e : edges_) {
        j["edges"].push_back({{"src", e.src},
                              {"rel", std::string(to_string(e.rel))},
                              {"dst", e.dst}});
    }
    return j.dump();
}

}  // namespace graphqa
