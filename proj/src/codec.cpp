#include "kgqa/codec.hpp"

#include "kgqa/kg/sparql_json.hpp"

using nlohmann::json;

namespace {

template <typename T>
json optionalJson(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

template <typename T>
std::optional<T> optionalFrom(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

namespace kgqa::kg {

void to_json(json& j, const EntityRecord& r) {
  j = json{{"id", r.id},
           {"label", r.label},
           {"description", r.description},
           {"kind", to_string(r.kind)},
           {"resolvable", r.resolvable}};
}

void from_json(const json& j, EntityRecord& r) {
  r.id = j.at("id").get<std::string>();
  r.label = j.value("label", "");
  r.description = j.value("description", "");
  const auto kind = j.value("kind", std::string("entity"));
  if (kind == "entity") {
    r.kind = RecordKind::entity;
  } else if (kind == "relation") {
    r.kind = RecordKind::relation;
  } else {
    throw ValidationError("unknown record kind '" + kind + "'");
  }
  r.resolvable = j.value("resolvable", true);
}

void to_json(json& j, const SparqlResultTable& t) { j = toSparqlResultsJson(t); }

void from_json(const json& j, SparqlResultTable& t) { t = parseSparqlResultsJson(j.dump()); }

void to_json(json& j, const FewShotExample& e) {
  j = json{{"question", e.question}, {"sparql", e.sparql}};
}

void from_json(const json& j, FewShotExample& e) {
  e.question = j.at("question").get<std::string>();
  e.sparql = j.at("sparql").get<std::string>();
}

void to_json(json& j, const SchemaSummary& s) {
  j = json{{"backend", s.backendName},
           {"prose", s.prose},
           {"exampleEntities", s.exampleEntities},
           {"exampleRelations", s.exampleRelations}};
}

}  // namespace kgqa::kg

namespace kgqa::llm {

void to_json(json& j, const ChatMessage& m) {
  j = json{{"role", to_string(m.role)},
           {"content", m.content},
           {"origin", to_string(m.origin)},
           {"llmGenerated", m.llmGenerated()}};
}

void from_json(const json& j, ChatMessage& m) {
  m.role = roleFromString(j.at("role").get<std::string>());
  m.content = j.at("content").get<std::string>();
  m.origin = originFromString(j.at("origin").get<std::string>());
}

}  // namespace kgqa::llm

namespace kgqa::sparql {

void to_json(json& j, const GraphNode& n) {
  j = json{{"key", n.key}, {"label", n.label}, {"resolved", n.resolved}};
}

void from_json(const json& j, GraphNode& n) {
  n.key = j.at("key").get<std::string>();
  n.label = j.at("label").get<std::string>();
  n.resolved = j.at("resolved").get<bool>();
}

void to_json(json& j, const GraphEdge& e) {
  j = json{{"source", e.source}, {"target", e.target}, {"relation", e.relation}, {"label", e.label}};
}

void from_json(const json& j, GraphEdge& e) {
  e.source = j.at("source").get<std::string>();
  e.target = j.at("target").get<std::string>();
  e.relation = j.at("relation").get<std::string>();
  e.label = j.at("label").get<std::string>();
}

void to_json(json& j, const QueryGraph& g) { j = json{{"nodes", g.nodes}, {"edges", g.edges}}; }

void from_json(const json& j, QueryGraph& g) {
  g.nodes = j.at("nodes").get<std::vector<GraphNode>>();
  g.edges = j.at("edges").get<std::vector<GraphEdge>>();
}

void to_json(json& j, const ResultsGraph& g) {
  json tables = json::array();
  for (const auto& t : g.tables) {
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back({{"display", r.display}, {"id", optionalJson(r.id)}});
    tables.push_back({{"variable", t.variable}, {"nodeKey", t.nodeKey}, {"rows", rows}});
  }
  j = json{{"nodes", g.nodes}, {"tables", tables}, {"edges", g.edges}, {"rowCount", g.rowCount}};
}

}  // namespace kgqa::sparql

namespace kgqa::protocol {

void to_json(json& j, const SubState& s) {
  j = json{{"stage", to_string(s.stage())},
           {"detail", to_string(s.detail)},
           {"display", std::string(displayName(s.stage())) + " -> " +
                           std::string(displayName(s.detail))}};
}

void from_json(const json& j, SubState& s) {
  s.detail = detailFromString(j.at("detail").get<std::string>());
  if (j.contains("stage") && stageFromString(j.at("stage").get<std::string>()) != s.stage()) {
    throw ValidationError("sub-state " + j.at("detail").get<std::string>() +
                          " does not belong to stage " + j.at("stage").get<std::string>());
  }
}

void to_json(json& j, const StateEvent& e) {
  j = json{{"index", e.index},
           {"timestamp", e.timestamp},
           {"subState", e.subState},
           {"kind", to_string(e.kind)},
           {"note", e.note},
           {"payloadRef", optionalJson(e.payloadRef)}};
}

void from_json(const json& j, StateEvent& e) {
  e.index = j.at("index").get<std::size_t>();
  e.timestamp = j.at("timestamp").get<std::int64_t>();
  e.subState = j.at("subState").get<SubState>();
  e.kind = eventKindFromString(j.at("kind").get<std::string>());
  e.note = j.at("note").get<std::string>();
  e.payloadRef = optionalFrom<std::string>(j, "payloadRef");
}

void to_json(json& j, const GeneratedQuery& q) {
  j = json{{"sparql", q.sparql},
           {"explanation", q.explanation},
           {"inlineComments", q.inlineComments},
           {"origin", llm::to_string(q.origin)},
           {"llmGenerated", q.origin == llm::Origin::llm}};
}

void from_json(const json& j, GeneratedQuery& q) {
  q.sparql = j.at("sparql").get<std::string>();
  q.explanation = j.at("explanation").get<std::string>();
  q.inlineComments = j.at("inlineComments").get<std::vector<std::string>>();
  q.origin = llm::originFromString(j.at("origin").get<std::string>());
}

void to_json(json& j, const Session& s) {
  json lastError = nullptr;
  if (s.lastError) {
    lastError = {{"kind", to_string(s.lastError->kind)}, {"message", s.lastError->message}};
  }
  j = json{{"id", s.id},
           {"question", s.question},
           {"history", s.history},
           {"stage", s.stage},
           {"discovered", s.discovered},
           {"generatedQuery", optionalJson(s.generatedQuery)},
           {"results", optionalJson(s.results)},
           {"summary", optionalJson(s.summary)},
           {"events", s.events},
           {"awaitingUser", s.awaitingUser},
           {"refinementTurns", s.refinementTurns},
           {"kgCalls", s.kgCalls},
           {"llmCalls", s.llmCalls},
           {"entityTable", s.entityTable},
           {"hallucinatedIds", s.hallucinatedIds},
           {"lastError", lastError}};
}

void from_json(const json& j, Session& s) {
  s.id = j.at("id").get<std::string>();
  s.question = j.at("question").get<std::string>();
  s.history = j.at("history").get<std::vector<llm::ChatMessage>>();
  s.stage = j.at("stage").get<SubState>();
  s.discovered = j.at("discovered").get<std::vector<kg::EntityRecord>>();
  s.generatedQuery = optionalFrom<GeneratedQuery>(j, "generatedQuery");
  s.results = optionalFrom<kg::SparqlResultTable>(j, "results");
  s.summary = optionalFrom<std::string>(j, "summary");
  s.events = j.at("events").get<std::vector<StateEvent>>();
  s.awaitingUser = j.at("awaitingUser").get<bool>();
  s.refinementTurns = j.at("refinementTurns").get<int>();
  s.kgCalls = j.at("kgCalls").get<int>();
  s.llmCalls = j.at("llmCalls").get<std::size_t>();
  s.entityTable = j.at("entityTable").get<std::vector<kg::EntityRecord>>();
  s.hallucinatedIds = j.at("hallucinatedIds").get<std::vector<std::string>>();
  s.lastError.reset();
  if (j.contains("lastError") && !j.at("lastError").is_null()) {
    const auto& e = j.at("lastError");
    s.lastError = SessionError{errorKindFromString(e.at("kind").get<std::string>()),
                               e.at("message").get<std::string>()};
  }
}

}  // namespace kgqa::protocol
