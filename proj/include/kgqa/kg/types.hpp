#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kgqa::kg {

/// True for Wikidata-form entity identifiers ("Q" followed by digits).
bool isEntityIdText(std::string_view text);
/// True for Wikidata-form relation identifiers ("P" followed by digits).
bool isRelationIdText(std::string_view text);

class EntityId {
 public:
  /// Throws ValidationError unless `value` is an entity identifier.
  explicit EntityId(std::string value);

  const std::string& str() const noexcept { return value_; }
  auto operator<=>(const EntityId&) const = default;

 private:
  std::string value_;
};

class RelationId {
 public:
  /// Throws ValidationError unless `value` is a relation identifier.
  explicit RelationId(std::string value);

  const std::string& str() const noexcept { return value_; }
  auto operator<=>(const RelationId&) const = default;

 private:
  std::string value_;
};

enum class RecordKind { entity, relation };

std::string_view to_string(RecordKind kind);

/// Either an entity or a relation identifier.
class KgId {
 public:
  KgId(EntityId id);    // NOLINT(google-explicit-constructor)
  KgId(RelationId id);  // NOLINT(google-explicit-constructor)

  /// Parses "Q…" or "P…"; throws ValidationError otherwise.
  static KgId parse(std::string_view text);

  RecordKind kind() const noexcept { return kind_; }
  const std::string& str() const noexcept { return value_; }
  auto operator<=>(const KgId&) const = default;

 private:
  KgId(RecordKind kind, std::string value)
      : kind_(kind), value_(std::move(value)) {}

  RecordKind kind_;
  std::string value_;
};

/// Row of the entity-relation table. An unresolvable record is one the KG
/// does not know; its label and description are empty.
struct EntityRecord {
  std::string id;
  std::string label;
  std::string description;
  RecordKind kind = RecordKind::entity;
  bool resolvable = true;

  bool operator==(const EntityRecord&) const = default;
};

EntityRecord unresolvableRecord(const KgId& id);

struct IriCell {
  std::string value;
  bool operator==(const IriCell&) const = default;
};

struct LiteralCell {
  std::string value;
  std::optional<std::string> datatype;
  std::optional<std::string> language;
  bool operator==(const LiteralCell&) const = default;
};

struct UnboundCell {
  bool operator==(const UnboundCell&) const = default;
};

using Cell = std::variant<UnboundCell, IriCell, LiteralCell>;

/// Plain text of a cell: IRI or lexical form, empty when unbound.
std::string cellText(const Cell& cell);

struct SparqlResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  /// Throws ValidationError if a row width differs from the column count or
  /// a column name repeats.
  void validate() const;
  std::optional<std::size_t> columnIndex(std::string_view name) const;

  bool operator==(const SparqlResultTable&) const = default;
};

struct SchemaSummary {
  std::string backendName;
  std::string prose;
  std::vector<EntityRecord> exampleEntities;
  std::vector<EntityRecord> exampleRelations;

  bool operator==(const SchemaSummary&) const = default;
};

struct FewShotExample {
  std::string question;
  std::string sparql;

  bool operator==(const FewShotExample&) const = default;
};

/// Wikidata namespaces. The stub backend uses the same IRIs so queries and
/// identifier extraction are portable between the two.
inline constexpr std::string_view kEntityNamespace = "http://www.wikidata.org/entity/";
inline constexpr std::string_view kDirectClaimNamespace = "http://www.wikidata.org/prop/direct/";
inline constexpr std::string_view kRdfsLabel = "http://www.w3.org/2000/01/rdf-schema#label";

/// Extracts "Q…"/"P…" from an IRI in any Wikidata namespace, if present.
std::optional<KgId> idFromIri(std::string_view iri);

}  // namespace kgqa::kg
