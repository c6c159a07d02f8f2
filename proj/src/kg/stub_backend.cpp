#include "kgqa/kg/stub_backend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "kgqa/error.hpp"
#include "kgqa/kg/sparql_json.hpp"
#include "kgqa/sparql/query.hpp"

namespace kgqa::kg {

using nlohmann::json;

std::string normalizeWhitespace(std::string_view text) {
  std::string out;
  bool pendingSpace = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pendingSpace = !out.empty();
    } else {
      if (pendingSpace) out.push_back(' ');
      pendingSpace = false;
      out.push_back(c);
    }
  }
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

EntityRecord parseRecord(const json& j, RecordKind kind) {
  EntityRecord r{j.at("id").get<std::string>(), j.at("label").get<std::string>(),
                 j.value("description", ""), kind, true};
  if (kind == RecordKind::entity && !isEntityIdText(r.id)) {
    throw ConfigError("stub entity id '" + r.id + "' is not of the form Q<digits>");
  }
  if (kind == RecordKind::relation && !isRelationIdText(r.id)) {
    throw ConfigError("stub relation id '" + r.id + "' is not of the form P<digits>");
  }
  return r;
}

// Ground triple in RDF terms, using the Wikidata namespaces.
struct GroundTriple {
  Cell subject;
  Cell predicate;
  Cell object;
};

bool cellMatchesTerm(const Cell& cell, const sparql::Term& term) {
  if (term.kind == sparql::TermKind::iri) {
    const auto* iri = std::get_if<IriCell>(&cell);
    return iri && iri->value == term.value;
  }
  const auto* lit = std::get_if<LiteralCell>(&cell);
  if (!lit || lit->value != term.value) return false;
  if (term.language) return lit->language && lower(*lit->language) == lower(*term.language);
  const std::string xsdString = "http://www.w3.org/2001/XMLSchema#string";
  const auto termType = term.datatype.value_or(xsdString);
  const auto cellType = lit->datatype.value_or(xsdString);
  return !lit->language && termType == cellType;
}

using Binding = std::map<std::string, Cell>;

void solve(const std::vector<sparql::Triple>& patterns, std::size_t index,
           const std::vector<GroundTriple>& triples, Binding& binding,
           std::vector<Binding>& out) {
  if (index == patterns.size()) {
    out.push_back(binding);
    return;
  }
  const auto& p = patterns[index];
  for (const auto& t : triples) {
    std::vector<std::string> bound;
    bool ok = true;
    const std::pair<const sparql::Term*, const Cell*> slots[] = {
        {&p.subject, &t.subject}, {&p.predicate, &t.predicate}, {&p.object, &t.object}};
    for (const auto& [term, cell] : slots) {
      if (term->isVariable()) {
        auto it = binding.find(term->value);
        if (it != binding.end()) {
          if (!(it->second == *cell)) {
            ok = false;
            break;
          }
        } else {
          binding.emplace(term->value, *cell);
          bound.push_back(term->value);
        }
      } else if (!cellMatchesTerm(*cell, *term)) {
        ok = false;
        break;
      }
    }
    if (ok) solve(patterns, index + 1, triples, binding, out);
    for (const auto& v : bound) binding.erase(v);
  }
}

}  // namespace

StubBackend::StubBackend(StubData data) : data_(std::move(data)) {
  for (std::size_t i = 0; i < data_.entities.size(); ++i) index_[data_.entities[i].id] = i;
  for (std::size_t i = 0; i < data_.relations.size(); ++i) {
    index_[data_.relations[i].id] = data_.entities.size() + i;
  }
  if (data_.prose.empty()) throw ConfigError("stub backend needs non-empty schema prose");
}

StubData StubBackend::loadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stub KG file " + path.string());
  try {
    const auto doc = json::parse(in);
    StubData data;
    data.name = doc.value("name", "stub");
    data.prose = doc.at("prose").get<std::string>();
    for (const auto& e : doc.value("entities", json::array())) {
      data.entities.push_back(parseRecord(e, RecordKind::entity));
    }
    for (const auto& r : doc.value("relations", json::array())) {
      data.relations.push_back(parseRecord(r, RecordKind::relation));
    }
    for (const auto& s : doc.value("statements", json::array())) {
      StubStatement st{s.at(0).get<std::string>(), s.at(1).get<std::string>(), {}};
      const auto& o = s.at(2);
      if (o.is_string()) {
        st.object.entity = o.get<std::string>();
      } else {
        LiteralCell lit{o.at("value").get<std::string>(), std::nullopt, std::nullopt};
        if (o.contains("datatype")) lit.datatype = o["datatype"].get<std::string>();
        if (o.contains("lang")) lit.language = o["lang"].get<std::string>();
        st.object.literal = std::move(lit);
      }
      data.statements.push_back(std::move(st));
    }
    for (const auto& f : doc.value("fewShot", json::array())) {
      data.fewShot.push_back({f.at("question").get<std::string>(), f.at("sparql").get<std::string>()});
    }
    for (const auto& c : doc.value("canned", json::array())) {
      data.cannedResults[normalizeWhitespace(c.at("query").get<std::string>())] =
          parseSparqlResultsJson(c.at("results").dump());
    }
    return data;
  } catch (const json::exception& e) {
    throw ConfigError("malformed stub KG file " + path.string() + ": " + e.what());
  } catch (const QueryError& e) {
    throw ConfigError("malformed canned results in " + path.string() + ": " + e.what());
  }
}

const EntityRecord* StubBackend::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return it->second < data_.entities.size()
             ? &data_.entities[it->second]
             : &data_.relations[it->second - data_.entities.size()];
}

std::vector<EntityRecord> StubBackend::fuzzySearchEntities(std::string_view term,
                                                           std::size_t limit) const {
  const auto needle = lower(requireSearchTerm(term));
  requirePositiveLimit(limit);
  const auto needleWords = words(needle);

  struct Scored {
    int score;
    std::size_t order;
    const EntityRecord* record;
  };
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < data_.entities.size(); ++i) {
    const auto& e = data_.entities[i];
    const auto label = lower(e.label);
    int score = 0;
    if (label == needle) {
      score = 1000;
    } else if (label.starts_with(needle)) {
      score = 500;
    } else if (label.find(needle) != std::string::npos) {
      score = 300;
    } else {
      const auto labelWords = words(label);
      for (const auto& w : needleWords) {
        if (std::find(labelWords.begin(), labelWords.end(), w) != labelWords.end()) score += 10;
      }
    }
    if (score > 0) scored.push_back({score, i, &e});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<EntityRecord> out;
  for (const auto& s : scored) {
    if (out.size() == limit) break;
    out.push_back(*s.record);
  }
  return out;
}

std::vector<EntityRecord> StubBackend::getRecords(std::span<const KgId> ids) const {
  if (ids.empty()) throw ValidationError("getRecords needs at least one id");
  std::vector<EntityRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto* r = find(id.str());
    out.push_back(r ? *r : unresolvableRecord(id));
  }
  return out;
}

std::vector<EntityRecord> StubBackend::getRelationsForEntity(const EntityId& id,
                                                             std::size_t limit) const {
  requirePositiveLimit(limit);
  std::vector<EntityRecord> out;
  std::set<std::string> seen;
  for (const auto& s : data_.statements) {
    if (s.subject != id.str() || !seen.insert(s.relation).second) continue;
    const auto* r = find(s.relation);
    out.push_back(r ? *r : unresolvableRecord(KgId::parse(s.relation)));
    if (out.size() == limit) break;
  }
  return out;
}

std::vector<EntityRecord> StubBackend::traverse(const EntityId& head, const RelationId& relation,
                                                std::size_t limit) const {
  requirePositiveLimit(limit);
  std::vector<EntityRecord> out;
  std::set<std::string> seen;
  for (const auto& s : data_.statements) {
    if (s.subject != head.str() || s.relation != relation.str() || s.object.literal) continue;
    if (!seen.insert(s.object.entity).second) continue;
    const auto* r = find(s.object.entity);
    out.push_back(r ? *r : unresolvableRecord(KgId::parse(s.object.entity)));
    if (out.size() == limit) break;
  }
  return out;
}

SparqlResultTable StubBackend::executeSparql(std::string_view query,
                                             std::chrono::milliseconds /*timeout*/) const {
  if (query.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ValidationError("query text is empty");
  }
  if (auto it = data_.cannedResults.find(normalizeWhitespace(query));
      it != data_.cannedResults.end()) {
    return it->second;
  }
  sparql::ParsedQuery parsed;
  try {
    parsed = sparql::parseSelect(query);
  } catch (const Error& e) {
    throw QueryError(e.what());
  }
  if (!parsed.unsupportedClauses.empty()) {
    throw QueryError("the stub backend evaluates basic graph patterns only; cannot run " +
                     parsed.unsupportedClauses.front().kind);
  }
  for (const auto& item : parsed.projection) {
    if (item.expression) throw QueryError("the stub backend does not evaluate expressions");
  }
  if (parsed.modifiers.groupBy || parsed.modifiers.having) {
    throw QueryError("the stub backend does not evaluate aggregation");
  }

  std::vector<GroundTriple> triples;
  triples.reserve(data_.statements.size() + data_.entities.size());
  const std::string entityNs(kEntityNamespace);
  const std::string directNs(kDirectClaimNamespace);
  for (const auto& s : data_.statements) {
    Cell object = s.object.literal ? Cell{*s.object.literal} : Cell{IriCell{entityNs + s.object.entity}};
    triples.push_back({IriCell{entityNs + s.subject}, IriCell{directNs + s.relation}, object});
  }
  for (const auto& e : data_.entities) {
    triples.push_back({IriCell{entityNs + e.id}, IriCell{std::string(kRdfsLabel)},
                       LiteralCell{e.label, std::nullopt, "en"}});
  }

  std::vector<Binding> solutions;
  Binding binding;
  if (!parsed.triples.empty()) solve(parsed.triples, 0, triples, binding, solutions);

  SparqlResultTable table;
  table.columns = parsed.projectedVariables();
  std::set<std::vector<std::string>> distinctSeen;
  std::uint64_t skipped = 0;
  for (const auto& sol : solutions) {
    std::vector<Cell> row;
    std::vector<std::string> fingerprint;
    for (const auto& column : table.columns) {
      auto it = sol.find(column);
      row.push_back(it == sol.end() ? Cell{UnboundCell{}} : it->second);
      fingerprint.push_back(std::to_string(row.back().index()) + ":" + cellText(row.back()));
    }
    if ((parsed.modifiers.distinct || parsed.modifiers.reduced) &&
        !distinctSeen.insert(fingerprint).second) {
      continue;
    }
    if (parsed.modifiers.offset && skipped < *parsed.modifiers.offset) {
      ++skipped;
      continue;
    }
    if (parsed.modifiers.limit && table.rows.size() >= *parsed.modifiers.limit) break;
    table.rows.push_back(std::move(row));
  }
  return table;
}

SchemaSummary StubBackend::describeSchema() const {
  SchemaSummary s;
  s.backendName = data_.name;
  s.prose = data_.prose;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, data_.entities.size()); ++i) {
    s.exampleEntities.push_back(data_.entities[i]);
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(3, data_.relations.size()); ++i) {
    s.exampleRelations.push_back(data_.relations[i]);
  }
  return s;
}

}  // namespace kgqa::kg
