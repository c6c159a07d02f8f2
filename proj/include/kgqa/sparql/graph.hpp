#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgqa/kg/backend.hpp"
#include "kgqa/kg/types.hpp"
#include "kgqa/sparql/query.hpp"

namespace kgqa::sparql {

/// Node of the query structure graph. Concrete IRIs and literals are
/// resolved; variables are not.
struct GraphNode {
  std::string key;
  std::string label;
  bool resolved = false;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string source;
  std::string target;
  /// Canonical key of the predicate term.
  std::string relation;
  std::string label;

  bool operator==(const GraphEdge&) const = default;
};

struct QueryGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphNode* findNode(std::string_view key) const;
  bool operator==(const QueryGraph&) const = default;
};

/// Nodes are the distinct subject/object terms in first-occurrence order;
/// there is one edge per triple. Throws EmptyGraphError without triples.
QueryGraph buildQueryGraph(const ParsedQuery& query);

/// Replaces node and edge labels with KG labels where a resolvable record
/// matches the term's identifier. Other labels keep the query spelling.
void applyLabels(QueryGraph& graph, std::span<const kg::EntityRecord> records);

struct IdExtraction {
  /// Wikidata-form identifiers in first-occurrence order, no duplicates.
  std::vector<kg::KgId> ids;
  /// Concrete IRIs that carry no identifier (e.g. rdfs:label).
  std::vector<std::string> skippedIris;
};

/// Scans subject, predicate and object of every triple in order.
IdExtraction extractIds(const ParsedQuery& query);

/// One row per id, order preserved. Empty input makes no KG call.
std::vector<kg::EntityRecord> buildEntityRelationTable(std::span<const kg::KgId> ids,
                                                       const kg::KgBackend& kg);

struct TableRow {
  std::string display;
  std::optional<std::string> id;

  bool operator==(const TableRow&) const = default;
};

/// Result column embedded in place of a variable node.
struct EmbeddedTable {
  std::string variable;
  std::string nodeKey;
  std::vector<TableRow> rows;

  bool operator==(const EmbeddedTable&) const = default;
};

/// Query graph whose projected variable nodes are replaced by tables. Edges
/// keep their endpoint keys, so an endpoint names either a plain node or a
/// table's `nodeKey`. Row i of every table is result row i.
struct ResultsGraph {
  std::vector<GraphNode> nodes;
  std::vector<EmbeddedTable> tables;
  std::vector<GraphEdge> edges;
  std::size_t rowCount = 0;

  bool operator==(const ResultsGraph&) const = default;
};

/// Throws JoinError naming the first projected graph variable that is
/// missing from `results.columns`. A `<var>Label` column, when present, is
/// used as the display text of `<var>`'s cells.
ResultsGraph buildResultsGraph(const QueryGraph& graph, std::span<const std::string> projected,
                               const kg::SparqlResultTable& results);

}  // namespace kgqa::sparql
