#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "graphqa/fulltext.hpp"
#include "graphqa/types.hpp"

namespace graphqa {

struct LoadError : std::runtime_error {
    LoadError(const std::string& file, std::size_t line, const std::string& reason)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + reason),
          file(file),
          line(line),
          reason(reason) {}
    std::string file;
    std::size_t line;
    std::string reason;
};

// Bundle file names, fixed by the loader contract.
inline constexpr std::string_view kStandardsFile = "nodes_standard.csv";
inline constexpr std::string_view kHierarchyFile = "nodes_chapter_section_item.csv";
inline constexpr std::string_view kDomainFile = "nodes_domain.csv";
inline constexpr std::string_view kRelationsFile = "relations.csv";

enum class Direction { Out, In };

struct TraversalStep {
    RelationKind rel;
    Direction dir = Direction::Out;
};

// A traversal result: the visited nodes starting at the query node. The
// terminal node is path.back().
struct PathHit {
    std::vector<const Node*> path;
};

// Immutable typed property graph. Constructed once by load_bundle(); all
// accessors are const and safe for unlimited concurrent readers.
class KnowledgeGraph {
public:
    // Loads and validates the four-file CSV bundle from a directory.
    static KnowledgeGraph load_bundle(const std::string& dir);

    // Same loader over in-memory file contents keyed by bundle file name.
    static KnowledgeGraph load_bundle_strings(
        const std::map<std::string, std::string>& files);

    const std::map<std::string, Node, std::less<>>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    const Node* find(std::string_view id) const;
    const Node& at(std::string_view id) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::map<std::string, std::size_t> node_counts_by_kind() const;
    std::map<std::string, std::size_t> edge_counts_by_relation() const;

    // Edge indexes into edges(), canonical order, touching the given node.
    std::span<const std::size_t> out_edges(std::string_view id) const;
    std::span<const std::size_t> in_edges(std::string_view id) const;

    // Name/alias dictionary: case-folded surface form -> node ids (sorted).
    const std::map<std::string, std::vector<std::string>>& name_index() const {
        return name_index_;
    }

    // All simple paths following exactly the given steps (1 or 2), ordered by
    // the node-id sequence ascending. Throws std::out_of_range on unknown id.
    std::vector<PathHit> typed_neighbors(std::string_view id,
                                         std::span<const TraversalStep> steps) const;
    std::vector<PathHit> typed_neighbors(std::string_view id, RelationKind rel,
                                         Direction dir, int depth) const;

    // BM25 search over names (double weight) and descriptions.
    std::vector<FulltextIndex::Hit> fulltext_search(std::string_view query,
                                                    std::size_t k) const;

    // Standard-to-node chain for a structural node; length 1 for a Standard.
    std::vector<const Node*> hierarchy_path(std::string_view id) const;

    // Canonical JSON serialization; byte-stable for identical bundles.
    std::string serialize() const;

private:
    KnowledgeGraph() = default;

    std::map<std::string, Node, std::less<>> nodes_;
    std::vector<Edge> edges_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> out_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> in_;
    std::map<std::string, std::vector<std::string>> name_index_;
    FulltextIndex fulltext_;
};

}  // namespace graphqa
