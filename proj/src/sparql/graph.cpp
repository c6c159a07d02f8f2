#include "kgqa/sparql/graph.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "kgqa/error.hpp"

namespace kgqa::sparql {

const GraphNode* QueryGraph::findNode(std::string_view key) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.key == key; });
  return it == nodes.end() ? nullptr : &*it;
}

QueryGraph buildQueryGraph(const ParsedQuery& query) {
  if (query.triples.empty()) {
    throw EmptyGraphError("query has no triple patterns to graph");
  }
  QueryGraph graph;
  std::set<std::string> seen;
  auto addNode = [&](const Term& term) {
    auto key = term.key();
    if (seen.insert(key).second) {
      graph.nodes.push_back({key, term.written, !term.isVariable()});
    }
    return key;
  };
  for (const auto& t : query.triples) {
    auto source = addNode(t.subject);
    auto target = addNode(t.object);
    graph.edges.push_back({std::move(source), std::move(target), t.predicate.key(),
                           t.predicate.written});
  }
  return graph;
}

namespace {

std::optional<std::string> idOfKey(std::string_view key) {
  if (key.size() < 2 || key.front() != '<' || key.back() != '>') return std::nullopt;
  auto id = kg::idFromIri(key.substr(1, key.size() - 2));
  if (!id) return std::nullopt;
  return id->str();
}

}  // namespace

void applyLabels(QueryGraph& graph, std::span<const kg::EntityRecord> records) {
  std::map<std::string, std::string> labels;
  for (const auto& r : records) {
    if (r.resolvable && !r.label.empty()) labels.emplace(r.id, r.label);
  }
  auto lookup = [&](std::string_view key) -> std::optional<std::string> {
    auto id = idOfKey(key);
    if (!id) return std::nullopt;
    auto it = labels.find(*id);
    if (it == labels.end()) return std::nullopt;
    return it->second;
  };
  for (auto& n : graph.nodes) {
    if (auto l = lookup(n.key)) n.label = *l;
  }
  for (auto& e : graph.edges) {
    if (auto l = lookup(e.relation)) e.label = *l;
  }
}

IdExtraction extractIds(const ParsedQuery& query) {
  IdExtraction out;
  std::set<std::string> seenIds;
  std::set<std::string> seenSkipped;
  for (const auto& t : query.triples) {
    for (const Term* term : {&t.subject, &t.predicate, &t.object}) {
      if (term->kind != TermKind::iri) continue;
      if (auto id = kg::idFromIri(term->value)) {
        if (seenIds.insert(id->str()).second) out.ids.push_back(*id);
      } else if (seenSkipped.insert(term->value).second) {
        out.skippedIris.push_back(term->value);
      }
    }
  }
  return out;
}

std::vector<kg::EntityRecord> buildEntityRelationTable(std::span<const kg::KgId> ids,
                                                       const kg::KgBackend& kg) {
  if (ids.empty()) return {};
  return kg.getRecords(ids);
}

ResultsGraph buildResultsGraph(const QueryGraph& graph, std::span<const std::string> projected,
                               const kg::SparqlResultTable& results) {
  results.validate();
  const std::set<std::string> projectedSet(projected.begin(), projected.end());

  ResultsGraph out;
  out.rowCount = results.rows.size();
  out.edges = graph.edges;
  for (const auto& node : graph.nodes) {
    const bool isVariable = !node.resolved && node.key.starts_with("?");
    const auto variable = isVariable ? node.key.substr(1) : std::string();
    if (!isVariable || !projectedSet.contains(variable)) {
      out.nodes.push_back(node);
      continue;
    }
    const auto column = results.columnIndex(variable);
    if (!column) {
      throw JoinError("results have no column for projected variable ?" + variable, variable);
    }
    const auto labelColumn = results.columnIndex(variable + "Label");
    EmbeddedTable table{variable, node.key, {}};
    table.rows.reserve(results.rows.size());
    for (const auto& row : results.rows) {
      const auto& cell = row[*column];
      TableRow r{kg::cellText(cell), std::nullopt};
      if (const auto* iri = std::get_if<kg::IriCell>(&cell)) {
        if (auto id = kg::idFromIri(iri->value)) {
          r.id = id->str();
          r.display = id->str();
        }
      }
      if (labelColumn) {
        auto label = kg::cellText(row[*labelColumn]);
        if (!label.empty()) r.display = std::move(label);
      }
      table.rows.push_back(std::move(r));
    }
    out.tables.push_back(std::move(table));
  }
  return out;
}

}  // namespace kgqa::sparql
