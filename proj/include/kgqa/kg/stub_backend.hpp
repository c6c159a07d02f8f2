#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kgqa/kg/backend.hpp"

namespace kgqa::kg {

/// Object of a stub statement: an entity id or a literal.
struct StubValue {
  std::string entity;
  std::optional<LiteralCell> literal;
};

struct StubStatement {
  std::string subject;
  std::string relation;
  StubValue object;
};

struct StubData {
  std::string name;
  std::string prose;
  std::vector<EntityRecord> entities;
  std::vector<EntityRecord> relations;
  std::vector<StubStatement> statements;
  std::vector<FewShotExample> fewShot;
  /// Canned results keyed by whitespace-normalised query text; consulted
  /// before evaluation.
  std::map<std::string, SparqlResultTable> cannedResults;
};

/// Offline knowledge graph loaded from a JSON file. Statements are exposed as
/// wd:/wdt: triples plus an English rdfs:label per entity, so Wikidata-style
/// basic graph pattern queries evaluate directly against it. Clauses outside
/// basic graph patterns are rejected with QueryError unless a canned result
/// matches the query.
class StubBackend final : public KgBackend {
 public:
  explicit StubBackend(StubData data);
  /// Throws ConfigError when the file is missing or malformed.
  static StubData loadFile(const std::filesystem::path& path);

  std::string name() const override { return data_.name; }
  std::vector<EntityRecord> fuzzySearchEntities(std::string_view term,
                                                std::size_t limit) const override;
  std::vector<EntityRecord> getRecords(std::span<const KgId> ids) const override;
  std::vector<EntityRecord> getRelationsForEntity(const EntityId& id,
                                                  std::size_t limit) const override;
  std::vector<EntityRecord> traverse(const EntityId& head, const RelationId& relation,
                                     std::size_t limit) const override;
  SparqlResultTable executeSparql(std::string_view query,
                                  std::chrono::milliseconds timeout) const override;
  SchemaSummary describeSchema() const override;
  std::vector<FewShotExample> fewShotExamples() const override { return data_.fewShot; }

 private:
  const EntityRecord* find(const std::string& id) const;

  StubData data_;
  std::map<std::string, std::size_t> index_;
};

/// Collapses runs of whitespace to one space and trims.
std::string normalizeWhitespace(std::string_view text);

}  // namespace kgqa::kg
