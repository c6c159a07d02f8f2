#pragma once

// Brute-force expectations for the analyzer corpus in
// tests/oracle/analyzer_cases.json. Everything here works from the
// hand-written triple lists and never calls the parser.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "kgqa/sparql/graph.hpp"

namespace kgqa::testsupport {

struct AnalyzerCase {
  std::string name;
  std::string query;
  std::vector<std::array<std::string, 3>> triples;
  std::vector<std::string> ids;
};

inline std::string expandCompact(const std::string& t) {
  static const std::map<std::string, std::string> kPrefixes = {
      {"wd", "http://www.wikidata.org/entity/"},
      {"wdt", "http://www.wikidata.org/prop/direct/"},
      {"p", "http://www.wikidata.org/prop/"},
      {"ps", "http://www.wikidata.org/prop/statement/"},
      {"pq", "http://www.wikidata.org/prop/qualifier/"},
      {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
      {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
      {"xsd", "http://www.w3.org/2001/XMLSchema#"},
      {"schema", "http://schema.org/"},
  };
  if (t.empty() || t[0] == '?' || t[0] == '<') return t;
  if (t[0] == '"') {
    auto caret = t.rfind("^^");
    if (caret == std::string::npos) return t;
    return t.substr(0, caret) + "^^" + expandCompact(t.substr(caret + 2));
  }
  auto colon = t.find(':');
  return "<" + kPrefixes.at(t.substr(0, colon)) + t.substr(colon + 1) + ">";
}

inline std::vector<AnalyzerCase> loadAnalyzerCases(const std::filesystem::path& file) {
  std::ifstream in(file);
  auto j = nlohmann::json::parse(in);
  std::vector<AnalyzerCase> cases;
  for (const auto& c : j) {
    AnalyzerCase ac;
    ac.name = c.at("name");
    ac.query = c.at("query");
    for (const auto& t : c.at("triples")) {
      ac.triples.push_back({expandCompact(t[0]), expandCompact(t[1]), expandCompact(t[2])});
    }
    ac.ids = c.at("ids").get<std::vector<std::string>>();
    cases.push_back(std::move(ac));
  }
  return cases;
}

struct OracleGraph {
  std::set<std::string> nodes;
  std::multiset<std::tuple<std::string, std::string, std::string>> edges;
  std::map<std::string, bool> resolved;
};

inline OracleGraph oracleGraph(const std::vector<std::array<std::string, 3>>& triples) {
  OracleGraph g;
  for (const auto& [s, p, o] : triples) {
    g.nodes.insert(s);
    g.nodes.insert(o);
    g.edges.insert({s, p, o});
  }
  for (const auto& n : g.nodes) g.resolved[n] = n[0] != '?';
  return g;
}

/// Empty when the analyzer's graph and ids agree with the oracle, otherwise a
/// description of the first difference.
inline std::string compareWithOracle(const AnalyzerCase& c, const sparql::QueryGraph& graph,
                                     const std::vector<std::string>& ids) {
  const auto want = oracleGraph(c.triples);
  std::set<std::string> nodes;
  std::map<std::string, bool> resolved;
  for (const auto& n : graph.nodes) {
    if (!nodes.insert(n.key).second) return "duplicate node " + n.key;
    resolved[n.key] = n.resolved;
  }
  std::multiset<std::tuple<std::string, std::string, std::string>> edges;
  for (const auto& e : graph.edges) edges.insert({e.source, e.relation, e.target});
  if (nodes != want.nodes) return "node set differs";
  if (edges != want.edges) return "edge multiset differs";
  if (resolved != want.resolved) return "resolved flags differ";
  if (ids != c.ids) {
    std::ostringstream os;
    os << "ids differ: got";
    for (const auto& id : ids) os << " " << id;
    return os.str();
  }
  return {};
}

}  // namespace kgqa::testsupport
