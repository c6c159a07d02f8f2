#include <gtest/gtest.h>

#include <atomic>
#include <chrono>

#include "kgqa/error.hpp"
#include "kgqa/sparql/graph.hpp"
#include "support/analyzer_oracle.hpp"
#include "support/random_bgp.hpp"

using namespace kgqa;
using namespace kgqa::sparql;

namespace {

std::vector<std::string> idStrings(const IdExtraction& x) {
  std::vector<std::string> out;
  for (const auto& id : x.ids) out.push_back(id.str());
  return out;
}

class CountingKg final : public kg::KgBackend {
 public:
  mutable std::atomic<int> calls{0};
  std::string name() const override { return "counting"; }
  std::vector<kg::EntityRecord> fuzzySearchEntities(std::string_view, std::size_t) const override {
    return {};
  }
  std::vector<kg::EntityRecord> getRecords(std::span<const kg::KgId> ids) const override {
    ++calls;
    std::vector<kg::EntityRecord> out;
    for (const auto& id : ids) {
      if (id.str() == "Q404") {
        out.push_back(kg::unresolvableRecord(id));
      } else {
        out.push_back({id.str(), "label " + id.str(), "", id.kind(), true});
      }
    }
    return out;
  }
  std::vector<kg::EntityRecord> getRelationsForEntity(const kg::EntityId&, std::size_t) const override {
    return {};
  }
  std::vector<kg::EntityRecord> traverse(const kg::EntityId&, const kg::RelationId&,
                                         std::size_t) const override {
    return {};
  }
  kg::SparqlResultTable executeSparql(std::string_view, std::chrono::milliseconds) const override {
    return {};
  }
  kg::SchemaSummary describeSchema() const override { return {}; }
  std::vector<kg::FewShotExample> fewShotExamples() const override { return {}; }
};

}  // namespace

TEST(QueryGraph, DirectorQueryHasThreeNodesTwoEdges) {
  auto g = buildQueryGraph(parseSelect(
      "SELECT ?film ?director WHERE { ?film wdt:P166 wd:Q102427 . ?film wdt:P57 ?director . }"));
  ASSERT_EQ(g.nodes.size(), 3u);
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(g.nodes[0].key, "?film");
  EXPECT_FALSE(g.nodes[0].resolved);
  EXPECT_TRUE(g.nodes[1].resolved);
  EXPECT_EQ(g.nodes[1].label, "wd:Q102427");
  EXPECT_EQ(g.edges[1].label, "wdt:P57");
}

TEST(QueryGraph, EmptyPatternThrows) {
  EXPECT_THROW(buildQueryGraph(parseSelect("SELECT ?x WHERE { OPTIONAL { ?x wdt:P1 ?y } }")),
               EmptyGraphError);
}

TEST(QueryGraph, ApplyLabelsUsesResolvableRecords) {
  auto g = buildQueryGraph(parseSelect("SELECT ?f WHERE { ?f wdt:P166 wd:Q102427 . ?f wdt:P57 wd:Q404 }"));
  std::vector<kg::EntityRecord> records = {
      {"Q102427", "Academy Award for Best Picture", "", kg::RecordKind::entity, true},
      {"P166", "award received", "", kg::RecordKind::relation, true},
      kg::unresolvableRecord(kg::KgId::parse("Q404")),
  };
  applyLabels(g, records);
  EXPECT_EQ(g.findNode("<http://www.wikidata.org/entity/Q102427>")->label,
            "Academy Award for Best Picture");
  EXPECT_EQ(g.findNode("<http://www.wikidata.org/entity/Q404>")->label, "wd:Q404");
  EXPECT_EQ(g.edges[0].label, "award received");
  EXPECT_EQ(g.edges[1].label, "wdt:P57");
}

TEST(ExtractIds, OrderAndSkippedIris) {
  auto x = extractIds(parseSelect(
      "SELECT ?x WHERE { wd:Q5 wdt:P31 ?x . ?x rdfs:label ?l . ?x wdt:P31 wd:Q5 . ?x p:P166 ?s }"));
  EXPECT_EQ(idStrings(x), (std::vector<std::string>{"Q5", "P31", "P166"}));
  EXPECT_EQ(x.skippedIris, std::vector<std::string>{"http://www.w3.org/2000/01/rdf-schema#label"});
}

TEST(EntityRelationTable, EmptyInputMakesNoCall) {
  CountingKg kg;
  EXPECT_TRUE(buildEntityRelationTable({}, kg).empty());
  EXPECT_EQ(kg.calls, 0);
  std::vector<kg::KgId> ids = {kg::KgId::parse("Q404"), kg::KgId::parse("P57")};
  auto rows = buildEntityRelationTable(ids, kg);
  EXPECT_EQ(kg.calls, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].resolvable);
  EXPECT_EQ(rows[1].kind, kg::RecordKind::relation);
}

TEST(AnalyzerOracle, CorpusMatchesBruteForce) {
  auto cases = testsupport::loadAnalyzerCases(KGQA_TESTS "/oracle/analyzer_cases.json");
  ASSERT_GE(cases.size(), 30u);
  for (const auto& c : cases) {
    auto q = parseSelect(c.query);
    auto diff = testsupport::compareWithOracle(c, buildQueryGraph(q), idStrings(extractIds(q)));
    EXPECT_TRUE(diff.empty()) << c.name << ": " << diff;
  }
}

TEST(AnalyzerProperty, RandomBgps) {
  testsupport::BgpGenerator gen(20240611);
  for (int i = 0; i < 1000; ++i) {
    auto bgp = gen.next();
    auto q = parseSelect(bgp.query);
    auto g = buildQueryGraph(q);
    auto want = testsupport::oracleGraph(bgp.triples);
    ASSERT_EQ(g.edges.size(), bgp.triples.size()) << bgp.query;
    ASSERT_EQ(g.nodes.size(), want.nodes.size()) << bgp.query;
    for (const auto& n : g.nodes) ASSERT_EQ(n.resolved, n.key[0] != '?') << bgp.query;
    auto once = parseSelect(serialize(q));
    ASSERT_EQ(once, q) << bgp.query;
    ASSERT_EQ(parseSelect(serialize(once)), once) << bgp.query;
  }
}

namespace {

kg::SparqlResultTable table(std::vector<std::string> cols, std::size_t rows) {
  kg::SparqlResultTable t;
  t.columns = cols;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<kg::Cell> row;
    for (const auto& c : cols) {
      row.push_back(kg::IriCell{"http://www.wikidata.org/entity/Q" + std::to_string(900 + r) + "_" + c});
    }
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace

TEST(ResultsGraph, TablesHaveOneRowPerResult) {
  auto q = parseSelect("SELECT ?a ?b ?c WHERE { ?a wdt:P1 ?b . ?b wdt:P2 ?c . ?c wdt:P3 wd:Q1 }");
  auto g = buildQueryGraph(q);
  const auto all = q.projectedVariables();
  for (std::size_t v = 1; v <= 3; ++v) {
    std::vector<std::string> projected(all.begin(), all.begin() + v);
    for (std::size_t r : {0u, 1u, 5u}) {
      auto rg = buildResultsGraph(g, projected, table(projected, r));
      ASSERT_EQ(rg.tables.size(), v);
      EXPECT_EQ(rg.rowCount, r);
      for (const auto& t : rg.tables) {
        ASSERT_EQ(t.rows.size(), r);
        for (std::size_t i = 0; i < r; ++i) {
          EXPECT_EQ(t.rows[i].display, "http://www.wikidata.org/entity/Q" + std::to_string(900 + i) +
                                           "_" + t.variable);
        }
      }
      EXPECT_EQ(rg.edges.size(), 3u);
      EXPECT_EQ(rg.nodes.size(), 4 - v);
    }
  }
}

TEST(ResultsGraph, LabelColumnAndIds) {
  auto q = parseSelect("SELECT ?film ?filmLabel WHERE { ?film wdt:P166 wd:Q102427 . ?film rdfs:label ?filmLabel }");
  kg::SparqlResultTable t;
  t.columns = {"film", "filmLabel"};
  t.rows.push_back({kg::IriCell{"http://www.wikidata.org/entity/Q25188"}, kg::LiteralCell{"Inception", std::nullopt, "en"}});
  auto rg = buildResultsGraph(buildQueryGraph(q), q.projectedVariables(), t);
  const auto& film = rg.tables.at(0);
  EXPECT_EQ(film.variable, "film");
  EXPECT_EQ(film.rows[0].display, "Inception");
  EXPECT_EQ(film.rows[0].id, "Q25188");
}

TEST(ResultsGraph, MissingColumnIsJoinError) {
  auto q = parseSelect("SELECT ?a ?b WHERE { ?a wdt:P1 ?b }");
  try {
    buildResultsGraph(buildQueryGraph(q), q.projectedVariables(), table({"a"}, 2));
    FAIL() << "expected JoinError";
  } catch (const JoinError& e) {
    EXPECT_EQ(e.variable(), "b");
  }
}
