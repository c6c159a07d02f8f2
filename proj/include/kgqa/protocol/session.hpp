#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/error.hpp"
#include "kgqa/kg/types.hpp"
#include "kgqa/llm/chat.hpp"
#include "kgqa/protocol/stage.hpp"

namespace kgqa::protocol {

enum class EventKind {
  transition,
  user_message,
  rewind,
  reprompt,
  protocol_error,
  hallucination,
  notice,
  warning,
  budget,
  empty_results,
  error,
};

std::string_view to_string(EventKind kind);
EventKind eventKindFromString(std::string_view text);

struct StateEvent {
  std::size_t index = 0;
  std::int64_t timestamp = 0;
  SubState subState;
  EventKind kind = EventKind::transition;
  std::string note;
  /// "message:<n>", "query" or "results".
  std::optional<std::string> payloadRef;

  bool operator==(const StateEvent&) const = default;
};

struct GeneratedQuery {
  std::string sparql;
  std::string explanation;
  /// `#` comments of the query, shown inline in the editor.
  std::vector<std::string> inlineComments;
  llm::Origin origin = llm::Origin::llm;

  bool operator==(const GeneratedQuery&) const = default;
};

/// Last failure that stopped the protocol from advancing.
struct SessionError {
  ErrorKind kind = ErrorKind::protocol;
  std::string message;

  bool operator==(const SessionError&) const = default;
};

struct Session {
  std::string id;
  std::string question;
  std::vector<llm::ChatMessage> history;
  SubState stage;
  std::vector<kg::EntityRecord> discovered;
  std::optional<GeneratedQuery> generatedQuery;
  std::optional<kg::SparqlResultTable> results;
  std::optional<std::string> summary;
  std::vector<StateEvent> events;

  bool awaitingUser = false;
  int refinementTurns = 0;
  int kgCalls = 0;
  /// LLM exchanges so far; the replay cursor of the session's cassette.
  std::size_t llmCalls = 0;
  /// Entity-relation table for the current query.
  std::vector<kg::EntityRecord> entityTable;
  /// Ids in the current query that never came from the KG or are unknown to it.
  std::vector<std::string> hallucinatedIds;
  std::optional<SessionError> lastError;

  bool operator==(const Session&) const = default;
};

/// One letter per event stage: R, K, G, S.
std::string stageTrace(const std::vector<StateEvent>& events);

/// True when the trace of a completed session has the protocol's shape:
/// refinement, exploration, query generation with optional exploration
/// repairs, then summarization.
bool traceMatchesProtocol(const std::vector<StateEvent>& events);

}  // namespace kgqa::protocol
