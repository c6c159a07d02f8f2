#pragma once

// JSON encodings shared by the CLI, the HTTP service and the session store.
// Decoders throw nlohmann::json exceptions or ValidationError on bad input.

#include <json.hpp>

#include "kgqa/kg/types.hpp"
#include "kgqa/llm/chat.hpp"
#include "kgqa/protocol/session.hpp"
#include "kgqa/sparql/graph.hpp"

namespace kgqa::kg {
void to_json(nlohmann::json& j, const EntityRecord& r);
void from_json(const nlohmann::json& j, EntityRecord& r);
void to_json(nlohmann::json& j, const SparqlResultTable& t);
void from_json(const nlohmann::json& j, SparqlResultTable& t);
void to_json(nlohmann::json& j, const FewShotExample& e);
void from_json(const nlohmann::json& j, FewShotExample& e);
void to_json(nlohmann::json& j, const SchemaSummary& s);
}  // namespace kgqa::kg

namespace kgqa::llm {
void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
}  // namespace kgqa::llm

namespace kgqa::sparql {
void to_json(nlohmann::json& j, const GraphNode& n);
void from_json(const nlohmann::json& j, GraphNode& n);
void to_json(nlohmann::json& j, const GraphEdge& e);
void from_json(const nlohmann::json& j, GraphEdge& e);
/// `{nodes:[{key,label,resolved}], edges:[{source,target,relation,label}]}`
void to_json(nlohmann::json& j, const QueryGraph& g);
void from_json(const nlohmann::json& j, QueryGraph& g);
void to_json(nlohmann::json& j, const ResultsGraph& g);
}  // namespace kgqa::sparql

namespace kgqa::protocol {
void to_json(nlohmann::json& j, const SubState& s);
void from_json(const nlohmann::json& j, SubState& s);
void to_json(nlohmann::json& j, const StateEvent& e);
void from_json(const nlohmann::json& j, StateEvent& e);
void to_json(nlohmann::json& j, const GeneratedQuery& q);
void from_json(const nlohmann::json& j, GeneratedQuery& q);
void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);
}  // namespace kgqa::protocol
