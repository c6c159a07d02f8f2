#include "kgqa/kg/wikidata_backend.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "kgqa/error.hpp"
#include "kgqa/kg/sparql_json.hpp"

namespace kgqa::kg {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxSearchLimit = 50;
constexpr std::size_t kGetEntitiesBatch = 50;

json parseBody(const HttpResponse& response, std::string_view what) {
  try {
    return json::parse(response.body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string(what) + " returned malformed JSON: " + e.what(),
                         response.status);
  }
}

std::string localizedValue(const json& entity, const char* field, const std::string& lang) {
  if (!entity.contains(field)) return {};
  const auto& values = entity[field];
  if (!values.is_object() || !values.contains(lang)) return {};
  return values[lang].value("value", "");
}

}  // namespace

WikidataBackend::WikidataBackend(std::shared_ptr<HttpTransport> transport, WikidataOptions options)
    : transport_(std::move(transport)), options_(std::move(options)) {}

HttpResponse WikidataBackend::call(const HttpRequest& request) const {
  auto response = transport_->send(request);
  if (response.status == 401 || response.status == 403) {
    throw AuthError("Wikidata refused the request (HTTP " + std::to_string(response.status) + ")",
                    response.status);
  }
  if (response.status != 200) {
    throw TransportError("Wikidata returned HTTP " + std::to_string(response.status) + ": " +
                             response.body.substr(0, 300),
                         response.status);
  }
  return response;
}

std::vector<EntityRecord> WikidataBackend::fuzzySearchEntities(std::string_view term,
                                                               std::size_t limit) const {
  const auto search = requireSearchTerm(term);
  requirePositiveLimit(limit);
  HttpRequest request;
  request.url = options_.apiUrl;
  request.params = {{"action", "wbsearchentities"},
                    {"search", search},
                    {"language", options_.language},
                    {"uselang", options_.language},
                    {"type", "item"},
                    {"limit", std::to_string(std::min(limit, kMaxSearchLimit))},
                    {"format", "json"}};
  const auto doc = parseBody(call(request), "wbsearchentities");
  if (doc.contains("error")) {
    throw TransportError("wbsearchentities error: " + doc["error"].dump(), 200);
  }
  std::vector<EntityRecord> out;
  for (const auto& hit : doc.value("search", json::array())) {
    const auto id = hit.value("id", "");
    if (!isEntityIdText(id)) continue;
    std::string label = hit.value("label", "");
    if (label.empty() && hit.contains("display") && hit["display"].contains("label")) {
      label = hit["display"]["label"].value("value", "");
    }
    std::string description = hit.value("description", "");
    if (description.empty() && hit.contains("display") && hit["display"].contains("description")) {
      description = hit["display"]["description"].value("value", "");
    }
    out.push_back({id, label.empty() ? id : label, description, RecordKind::entity, true});
    if (out.size() == limit) break;
  }
  return out;
}

std::vector<EntityRecord> WikidataBackend::getRecords(std::span<const KgId> ids) const {
  if (ids.empty()) throw ValidationError("getRecords needs at least one id");
  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (seen.insert(id.str()).second) unique.push_back(id.str());
  }

  std::map<std::string, EntityRecord> found;
  for (std::size_t start = 0; start < unique.size(); start += kGetEntitiesBatch) {
    const auto end = std::min(unique.size(), start + kGetEntitiesBatch);
    std::string joined;
    for (std::size_t i = start; i < end; ++i) {
      if (!joined.empty()) joined += "|";
      joined += unique[i];
    }
    HttpRequest request;
    request.url = options_.apiUrl;
    request.params = {{"action", "wbgetentities"},
                      {"ids", joined},
                      {"props", "labels|descriptions"},
                      {"languages", options_.language},
                      {"format", "json"}};
    const auto doc = parseBody(call(request), "wbgetentities");
    if (doc.contains("error")) {
      // A single unknown id fails the whole batch with no-such-entity; those
      // ids are reported as unresolvable instead.
      if (doc["error"].value("code", "") == "no-such-entity" && end - start > 1) {
        for (std::size_t i = start; i < end; ++i) {
          auto single = getRecords(std::vector<KgId>{KgId::parse(unique[i])});
          found.emplace(unique[i], single.front());
        }
        continue;
      }
      if (doc["error"].value("code", "") == "no-such-entity") continue;
      throw TransportError("wbgetentities error: " + doc["error"].dump(), 200);
    }
    const auto entities = doc.value("entities", json::object());
    for (const auto& [key, entity] : entities.items()) {
      if (entity.contains("missing")) continue;
      const auto id = entity.value("id", key);
      auto label = localizedValue(entity, "labels", options_.language);
      found[id] = EntityRecord{id, label.empty() ? id : label,
                               localizedValue(entity, "descriptions", options_.language),
                               isRelationIdText(id) ? RecordKind::relation : RecordKind::entity,
                               true};
    }
  }

  std::vector<EntityRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = found.find(id.str());
    out.push_back(it == found.end() ? unresolvableRecord(id) : it->second);
  }
  return out;
}

std::vector<EntityRecord> WikidataBackend::idsFromColumn(const SparqlResultTable& table,
                                                         std::string_view column,
                                                         RecordKind kind,
                                                         std::size_t limit) const {
  const auto index = table.columnIndex(column);
  if (!index) throw QueryError("missing result column " + std::string(column));
  std::vector<KgId> ids;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    const auto* iri = std::get_if<IriCell>(&row[*index]);
    if (!iri) continue;
    auto id = idFromIri(iri->value);
    if (!id || id->kind() != kind || !seen.insert(id->str()).second) continue;
    ids.push_back(*id);
    if (ids.size() == limit) break;
  }
  if (ids.empty()) return {};
  return getRecords(ids);
}

std::vector<EntityRecord> WikidataBackend::getRelationsForEntity(const EntityId& id,
                                                                 std::size_t limit) const {
  requirePositiveLimit(limit);
  const std::string query = "SELECT DISTINCT ?relation WHERE { wd:" + id.str() +
                            " ?direct ?value . ?relation wikibase:directClaim ?direct . } LIMIT " +
                            std::to_string(limit);
  return idsFromColumn(executeSparql(query, options_.explorationTimeout), "relation",
                       RecordKind::relation, limit);
}

std::vector<EntityRecord> WikidataBackend::traverse(const EntityId& head,
                                                    const RelationId& relation,
                                                    std::size_t limit) const {
  requirePositiveLimit(limit);
  const std::string query = "SELECT DISTINCT ?tail WHERE { wd:" + head.str() + " wdt:" +
                            relation.str() + " ?tail . FILTER(isIRI(?tail)) } LIMIT " +
                            std::to_string(limit);
  return idsFromColumn(executeSparql(query, options_.explorationTimeout), "tail",
                       RecordKind::entity, limit);
}

SparqlResultTable WikidataBackend::executeSparql(std::string_view query,
                                                 std::chrono::milliseconds timeout) const {
  if (query.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ValidationError("query text is empty");
  }
  HttpRequest request;
  request.url = options_.sparqlUrl;
  request.params = {{"query", std::string(query)}, {"format", "json"}};
  request.headers = {{"Accept", "application/sparql-results+json"}};
  request.timeout = timeout;
  const auto response = transport_->send(request);
  if (response.status == 400) {
    throw QueryError("endpoint rejected the query: " + response.body.substr(0, 500));
  }
  if (response.body.find("TimeoutException") != std::string::npos ||
      response.status == 504) {
    throw TimeoutError("query timed out on the endpoint");
  }
  if (response.status != 200) {
    throw TransportError("SPARQL endpoint returned HTTP " + std::to_string(response.status),
                         response.status);
  }
  return parseSparqlResultsJson(response.body);
}

SchemaSummary WikidataBackend::describeSchema() const {
  SchemaSummary s;
  s.backendName = "wikidata";
  s.prose =
      "Wikidata is a general-purpose knowledge graph of items and statements.\n"
      "Entities (items) have identifiers made of the letter Q followed by digits, e.g. Q5 "
      "(human). Relations (properties) have identifiers made of the letter P followed by "
      "digits, e.g. P31 (instance of).\n"
      "In SPARQL, entities are written wd:Q…, direct (truthy) statements use wdt:P…, full "
      "statement nodes use p:P…, their values ps:P… and qualifiers pq:P…. Human-readable "
      "names are available through rdfs:label with a language tag, e.g. "
      "?x rdfs:label ?xLabel . FILTER(LANG(?xLabel) = \"en\").\n"
      "Never guess identifiers: every Q and P id used in a query must come from a search, "
      "relation lookup or traversal result.";
  s.exampleEntities = {
      {"Q5", "human", "common name of Homo sapiens, unique extant species of the genus Homo",
       RecordKind::entity, true},
      {"Q11424", "film", "sequence of images that give the impression of movement",
       RecordKind::entity, true},
  };
  s.exampleRelations = {
      {"P31", "instance of", "that class of which this subject is a particular example and member",
       RecordKind::relation, true},
      {"P279", "subclass of", "this item is a subclass of that item", RecordKind::relation, true},
      {"P57", "director", "director(s) of film, TV-series, stageplay, video game or similar",
       RecordKind::relation, true},
  };
  return s;
}

std::vector<FewShotExample> WikidataBackend::fewShotExamples() const {
  return {
      {"Who directed the films that won the Academy Award for Best Picture?",
       "# films that received the award\n"
       "SELECT DISTINCT ?film ?director WHERE {\n"
       "  ?film wdt:P166 wd:Q102427 .\n"
       "  # their directors\n"
       "  ?film wdt:P57 ?director .\n"
       "}"},
      {"Which films did Christopher Nolan direct?",
       "SELECT ?film WHERE {\n"
       "  # only films\n"
       "  ?film wdt:P31 wd:Q11424 .\n"
       "  # directed by Christopher Nolan\n"
       "  ?film wdt:P57 wd:Q25191 .\n"
       "}"},
      {"Where was Marie Curie born?",
       "SELECT ?place WHERE {\n"
       "  # Marie Curie's place of birth\n"
       "  wd:Q7186 wdt:P19 ?place .\n"
       "}"},
      {"Which countries share a border with France?",
       "SELECT ?country WHERE {\n"
       "  # neighbours of France\n"
       "  wd:Q142 wdt:P47 ?country .\n"
       "  # keep sovereign states only\n"
       "  ?country wdt:P31 wd:Q3624078 .\n"
       "}"},
      {"Who were the members of The Beatles?",
       "SELECT ?member WHERE {\n"
       "  # people who were members of the band\n"
       "  ?member wdt:P463 wd:Q1299 .\n"
       "}"},
      {"How many moons does Jupiter have?",
       "SELECT (COUNT(?moon) AS ?count) WHERE {\n"
       "  # astronomical bodies orbiting Jupiter\n"
       "  wd:Q319 wdt:P398 ?moon .\n"
       "}"},
  };
}

}  // namespace kgqa::kg
