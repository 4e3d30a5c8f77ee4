#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "graphqa/graph.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& rel) {
    return std::string(FIXTURES_DIR) + "/" + rel;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::map<std::string, std::string> mini_bundle_files() {
    std::map<std::string, std::string> files;
    for (const char* name :
         {"nodes_standard.csv", "nodes_chapter_section_item.csv", "nodes_domain.csv",
          "relations.csv"}) {
        files[name] = read_file(fixture_path(std::string("graph_mini/") + name));
    }
    return files;
}

inline graphqa::KnowledgeGraph load_mini_graph() {
    return graphqa::KnowledgeGraph::load_bundle(fixture_path("graph_mini"));
}

}  // namespace testsupport
