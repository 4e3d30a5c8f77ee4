#include "graphqa/types.hpp"

namespace graphqa {

namespace {

constexpr std::array<std::string_view, kNodeKindCount> kNodeKindNames = {
    "Standard",         "Chapter",    "Section",          "Item",
    "FacilityType",     "HazardType", "TechnicalConcept", "RequirementType",
    "ProcessConcept",
};

constexpr std::array<std::string_view, kRelationKindCount> kRelationKindNames = {
    "HAS_CHAPTER", "HAS_SECTION", "HAS_ITEM", "DESCRIBED_IN",
    "SUBJECT_TO",  "MITIGATES",   "REQUIRES", "DEFINED_IN",
    "USED_IN",     "PRECEDES",    "AFFECTS",
};

}  // namespace

std::string_view to_string(NodeKind kind) {
    return kNodeKindNames[static_cast<std::size_t>(kind)];
}

std::string_view to_string(RelationKind rel) {
    return kRelationKindNames[static_cast<std::size_t>(rel)];
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (std::size_t i = 0; i < kNodeKindNames.size(); ++i) {
        if (kNodeKindNames[i] == s) return static_cast<NodeKind>(i);
    }
    return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view s) {
    for (std::size_t i = 0; i < kRelationKindNames.size(); ++i) {
        if (kRelationKindNames[i] == s) return static_cast<RelationKind>(i);
    }
    return std::nullopt;
}

bool is_structural(NodeKind kind) {
    return kind == NodeKind::Standard || kind == NodeKind::Chapter ||
           kind == NodeKind::Section || kind == NodeKind::Item;
}

bool is_structural(RelationKind rel) {
    return rel == RelationKind::HAS_CHAPTER || rel == RelationKind::HAS_SECTION ||
           rel == RelationKind::HAS_ITEM;
}

const RelationConstraint& relation_constraint(RelationKind rel) {
    using NK = NodeKind;
    static const std::array<RelationConstraint, kRelationKindCount> kConstraints = {{
        {{NK::Standard}, {NK::Chapter}, "Document structure"},
        {{NK::Chapter}, {NK::Section}, "Document structure"},
        {{NK::Section}, {NK::Item}, "Document structure"},
        {{NK::FacilityType}, {NK::Chapter, NK::Section}, "Rule location"},
        {{NK::FacilityType}, {NK::HazardType}, "Applicable hazard"},
        {{NK::FacilityType}, {NK::HazardType}, "Countermeasure"},
        {{NK::FacilityType}, {NK::TechnicalConcept}, "Required technique"},
        {{NK::TechnicalConcept}, {NK::Chapter, NK::Section}, "Definition location"},
        {{NK::TechnicalConcept}, {NK::ProcessConcept}, "Process stage"},
        {{NK::ProcessConcept}, {NK::ProcessConcept}, "Process order"},
        {{NK::HazardType}, {NK::FacilityType}, "Impact relation"},
    }};
    return kConstraints[static_cast<std::size_t>(rel)];
}

bool relation_allows(RelationKind rel, NodeKind src_kind, NodeKind dst_kind) {
    const auto& c = relation_constraint(rel);
    auto contains = [](const std::vector<NodeKind>& set, NodeKind k) {
        for (NodeKind x : set)
            if (x == k) return true;
        return false;
    };
    return contains(c.from, src_kind) && contains(c.to, dst_kind);
}

std::vector<std::string> Node::aliases() const {
    std::vector<std::string> out;
    auto it = extra.find("aliases");
    if (it == extra.end()) return out;
    const std::string& raw = it->second;
    std::size_t start = 0;
    while (start <= raw.size()) {
        std::size_t end = raw.find(',', start);
        if (end == std::string::npos) end = raw.size();
        std::size_t a = start, b = end;
        while (a < b && (raw[a] == ' ' || raw[a] == '\t')) ++a;
        while (b > a && (raw[b - 1] == ' ' || raw[b - 1] == '\t')) --b;
        if (b > a) out.push_back(raw.substr(a, b - a));
        if (end == raw.size()) break;
        start = end + 1;
    }
    return out;
}

}  // namespace graphqa
