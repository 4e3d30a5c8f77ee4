#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphqa {

// The nine node kinds of the schema. Standard/Chapter/Section/Item form the
// document hierarchy; the other five carry the domain semantics.
enum class NodeKind {
    Standard,
    Chapter,
    Section,
    Item,
    FacilityType,
    HazardType,
    TechnicalConcept,
    RequirementType,
    ProcessConcept,
};

constexpr std::size_t kNodeKindCount = 9;

// The eleven relation kinds. Each carries a fixed from/to kind constraint,
// see relation_constraint().
enum class RelationKind {
    HAS_CHAPTER,
    HAS_SECTION,
    HAS_ITEM,
    DESCRIBED_IN,
    SUBJECT_TO,
    MITIGATES,
    REQUIRES,
    DEFINED_IN,
    USED_IN,
    PRECEDES,
    AFFECTS,
};

constexpr std::size_t kRelationKindCount = 11;

std::string_view to_string(NodeKind kind);
std::string_view to_string(RelationKind rel);

// Closed sets: unknown labels return nullopt and are load errors upstream.
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<RelationKind> parse_relation_kind(std::string_view s);

bool is_structural(NodeKind kind);
bool is_structural(RelationKind rel);

struct RelationConstraint {
    std::vector<NodeKind> from;
    std::vector<NodeKind> to;
    // Short role description of the relation, used by prompt templates.
    std::string_view role;
};

const RelationConstraint& relation_constraint(RelationKind rel);

// True iff an edge (src_kind) -[rel]-> (dst_kind) satisfies the schema.
bool relation_allows(RelationKind rel, NodeKind src_kind, NodeKind dst_kind);

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Standard;
    std::string name;
    std::string description;
    std::map<std::string, std::string> extra;

    // Comma-separated extra["aliases"], split and trimmed.
    std::vector<std::string> aliases() const;
};

struct Edge {
    std::string src;
    RelationKind rel = RelationKind::HAS_CHAPTER;
    std::string dst;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

}  // namespace graphqa
