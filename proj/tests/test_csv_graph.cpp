#include <doctest.h>

#include <json.hpp>

#include "graphqa/csv.hpp"
#include "graphqa/graph.hpp"
#include "test_support.hpp"

using namespace graphqa;
using testsupport::fixture_path;
using testsupport::load_mini_graph;
using testsupport::mini_bundle_files;

TEST_CASE("csv parser handles quoting, CRLF and blank lines") {
    const std::string content =
        "id,name,description\r\n"
        "a,\"x, y\",\"line1\nline2\"\n"
        "\n"
        "b,plain,\"quote \"\" inside\"\n";
    const CsvTable t = parse_csv("f.csv", content);
    CHECK(t.header == std::vector<std::string>{"id", "name", "description"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].fields[1] == "x, y");
    CHECK(t.rows[0].fields[2] == "line1\nline2");
    CHECK(t.rows[1].fields[2] == "quote \" inside");
}

TEST_CASE("csv parser reports file and line on malformed rows") {
    CHECK_THROWS_WITH_AS(parse_csv("f.csv", "a,b\n1,2,3\n"),
                         doctest::Contains("f.csv:2"), CsvError);
    CHECK_THROWS_AS(parse_csv("f.csv", "a,b\n\"unterminated\n"), CsvError);
    CHECK_THROWS_AS(parse_csv("f.csv", ""), CsvError);
}

TEST_CASE("mini bundle loads with manifest counts") {
    const KnowledgeGraph g = load_mini_graph();
    const auto manifest =
        nlohmann::json::parse(testsupport::read_file(fixture_path("graph_mini/manifest.json")));

    CHECK(g.node_count() == manifest["total_nodes"].get<std::size_t>());
    CHECK(g.edge_count() == manifest["total_edges"].get<std::size_t>());

    const auto by_kind = g.node_counts_by_kind();
    for (const auto& [kind, count] : manifest["nodes"].items()) {
        CHECK(by_kind.at(kind) == count.get<std::size_t>());
    }
    const auto by_rel = g.edge_counts_by_relation();
    for (const auto& [rel, count] : manifest["relations"].items()) {
        CHECK(by_rel.at(rel) == count.get<std::size_t>());
    }
}

TEST_CASE("duplicate node rows merge last-writer-wins") {
    auto files = mini_bundle_files();
    const std::size_t base_nodes = load_mini_graph().node_count();

    files["nodes_domain.csv"] +=
        "fac_dam,FacilityType,Dam,updated description,ダム\n";
    const KnowledgeGraph g = KnowledgeGraph::load_bundle_strings(files);
    CHECK(g.node_count() == base_nodes);
    CHECK(g.at("fac_dam").description == "updated description");
}

TEST_CASE("duplicate identical edges collapse") {
    auto files = mini_bundle_files();
    files["relations.csv"] += "fac_dam,REQUIRES,tech_insp\n";  // already present
    const KnowledgeGraph g = KnowledgeGraph::load_bundle_strings(files);
    CHECK(g.edge_count() == 30);
}

TEST_CASE("edge referencing a missing node names the id") {
    auto files = mini_bundle_files();
    files["relations.csv"] += "fac_dam,REQUIRES,ghost\n";
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("ghost"), LoadError);
}

TEST_CASE("unknown kinds are load errors") {
    auto files = mini_bundle_files();
    files["nodes_domain.csv"] += "x1,Gadget,Widget,desc,\n";
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("Gadget"), LoadError);

    files = mini_bundle_files();
    files["relations.csv"] += "fac_dam,LINKED_TO,tech_insp\n";
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("LINKED_TO"), LoadError);
}

TEST_CASE("relation kind constraints are enforced") {
    auto files = mini_bundle_files();
    files["relations.csv"] += "tech_stab,REQUIRES,fac_dam\n";  // Tech -> Fac invalid
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("REQUIRES"), LoadError);
}

TEST_CASE("kind conflicts across files are load errors") {
    auto files = mini_bundle_files();
    files["nodes_domain.csv"] += "ch_r1,FacilityType,Clash,desc,\n";
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("redeclared"), LoadError);
}

TEST_CASE("orphan and multi-parent structural nodes are rejected") {
    auto files = mini_bundle_files();
    files["nodes_chapter_section_item.csv"] +=
        "ch_orphan,Chapter,迷子の章,親のない章,\n";
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("orphan"), LoadError);

    files = mini_bundle_files();
    files["relations.csv"] += "ch_r2,HAS_SECTION,sec_r1a\n";  // second parent
    CHECK_THROWS_WITH_AS(KnowledgeGraph::load_bundle_strings(files),
                         doctest::Contains("parents"), LoadError);
}

TEST_CASE("self-parent hierarchy rows are rejected") {
    auto files = mini_bundle_files();
    files["nodes_chapter_section_item.csv"] +=
        "sec_loop,Section,循環節,自分を親に持つ節,sec_loop\n";
    CHECK_THROWS_AS(KnowledgeGraph::load_bundle_strings(files), LoadError);
}

TEST_CASE("schema closure holds for every loaded edge") {
    const KnowledgeGraph g = load_mini_graph();
    for (const auto& e : g.edges()) {
        CHECK(relation_allows(e.rel, g.at(e.src).kind, g.at(e.dst).kind));
    }
}

TEST_CASE("loading the same bundle twice is byte-identical") {
    const KnowledgeGraph a = KnowledgeGraph::load_bundle_strings(mini_bundle_files());
    const KnowledgeGraph b = KnowledgeGraph::load_bundle_strings(mini_bundle_files());
    CHECK(a.serialize() == b.serialize());
}

TEST_CASE("typed_neighbors depth 1") {
    const KnowledgeGraph g = load_mini_graph();
    const auto hits =
        g.typed_neighbors("fac_sabodam", RelationKind::REQUIRES, Direction::Out, 1);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].path.back()->id == "tech_drain");
    CHECK(hits[1].path.back()->id == "tech_stab");

    CHECK_THROWS_AS(
        g.typed_neighbors("nope", RelationKind::REQUIRES, Direction::Out, 1),
        std::out_of_range);
}

TEST_CASE("typed_neighbors mixed two-step chain") {
    const KnowledgeGraph g = load_mini_graph();
    const std::vector<TraversalStep> steps = {
        {RelationKind::DESCRIBED_IN, Direction::Out},
        {RelationKind::HAS_SECTION, Direction::Out},
    };
    const auto hits = g.typed_neighbors("fac_sabodam", steps);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].path[1]->id == "ch_s1");
    CHECK(hits[0].path[2]->id == "sec_s1a");
    CHECK(hits[1].path[2]->id == "sec_s1b");
}

TEST_CASE("typed_neighbors inbound direction") {
    const KnowledgeGraph g = load_mini_graph();
    const auto hits =
        g.typed_neighbors("haz_debris", RelationKind::SUBJECT_TO, Direction::In, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].path.back()->id == "fac_sabodam");
}

TEST_CASE("hierarchy_path walks the structural chain") {
    const KnowledgeGraph g = load_mini_graph();

    const auto full = g.hierarchy_path("item_s1a1");
    REQUIRE(full.size() == 4);
    CHECK(full[0]->id == "std_sabo");
    CHECK(full[1]->id == "ch_s1");
    CHECK(full[2]->id == "sec_s1a");
    CHECK(full[3]->id == "item_s1a1");

    CHECK(g.hierarchy_path("std_river").size() == 1);
    CHECK_THROWS_WITH_AS(g.hierarchy_path("fac_dam"),
                         doctest::Contains("not structural"), std::invalid_argument);
}

TEST_CASE("name index carries names and aliases, case-folded") {
    const KnowledgeGraph g = load_mini_graph();
    const auto& idx = g.name_index();
    CHECK(idx.at("sabodam") == std::vector<std::string>{"fac_sabodam"});
    CHECK(idx.at("砂防堰堤") == std::vector<std::string>{"fac_sabodam"});
    CHECK(idx.at("sabo dam") == std::vector<std::string>{"fac_sabodam"});
    CHECK(idx.at("堤防") == std::vector<std::string>{"fac_levee"});
}
