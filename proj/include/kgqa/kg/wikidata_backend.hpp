#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "kgqa/kg/backend.hpp"
#include "kgqa/kg/transport.hpp"

namespace kgqa::kg {

struct WikidataOptions {
  std::string apiUrl = "https://www.wikidata.org/w/api.php";
  std::string sparqlUrl = "https://query.wikidata.org/sparql";
  std::string language = "en";
  /// Timeout for the SPARQL calls made by exploration operations.
  std::chrono::milliseconds explorationTimeout{30000};
};

/// Wikidata through its public APIs:
///   fuzzySearchEntities   -> api.php?action=wbsearchentities
///   getRecords            -> api.php?action=wbgetentities (batches of 50)
///   getRelationsForEntity -> SPARQL over wikibase:directClaim, then wbgetentities
///   traverse              -> SPARQL `wd:head wdt:rel ?tail`, then wbgetentities
///   executeSparql         -> GET sparqlUrl?query=…&format=json
/// Request/response details are documented in docs/wikidata-api.md.
class WikidataBackend final : public KgBackend {
 public:
  explicit WikidataBackend(std::shared_ptr<HttpTransport> transport, WikidataOptions options = {});

  std::string name() const override { return "wikidata"; }
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
  std::vector<FewShotExample> fewShotExamples() const override;

 private:
  HttpResponse call(const HttpRequest& request) const;
  std::vector<EntityRecord> idsFromColumn(const SparqlResultTable& table,
                                          std::string_view column, RecordKind kind,
                                          std::size_t limit) const;

  std::shared_ptr<HttpTransport> transport_;
  WikidataOptions options_;
};

}  // namespace kgqa::kg
