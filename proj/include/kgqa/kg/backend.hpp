#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/kg/types.hpp"

namespace kgqa::kg {

/// Contract every knowledge-graph data source implements. Swapping the KG
/// means swapping this object: its schema prose, its exploration calls and
/// its few-shot bank. Implementations must be safe for concurrent use.
class KgBackend {
 public:
  virtual ~KgBackend() = default;

  virtual std::string name() const = 0;

  /// Ranked free-text entity lookup. Throws ValidationError for a blank
  /// term or a zero limit.
  virtual std::vector<EntityRecord> fuzzySearchEntities(std::string_view term,
                                                        std::size_t limit) const = 0;

  /// One record per id, in input order. Unknown ids come back flagged
  /// unresolvable rather than failing the batch.
  virtual std::vector<EntityRecord> getRecords(std::span<const KgId> ids) const = 0;

  /// Distinct relations on the entity's outgoing statements; empty for an
  /// unknown entity.
  virtual std::vector<EntityRecord> getRelationsForEntity(const EntityId& id,
                                                          std::size_t limit) const = 0;

  /// Distinct entity tails of (head, relation, ?tail).
  virtual std::vector<EntityRecord> traverse(const EntityId& head, const RelationId& relation,
                                             std::size_t limit) const = 0;

  /// Zero rows is a valid result and keeps the projected columns.
  virtual SparqlResultTable executeSparql(std::string_view query,
                                          std::chrono::milliseconds timeout) const = 0;

  virtual SchemaSummary describeSchema() const = 0;

  /// Worked question→query pairs used to prime query generation.
  virtual std::vector<FewShotExample> fewShotExamples() const = 0;
};

/// Shared precondition checks.
std::string requireSearchTerm(std::string_view term);
void requirePositiveLimit(std::size_t limit);

}  // namespace kgqa::kg
