#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "kgqa/kg/backend.hpp"
#include "kgqa/llm/cassette.hpp"
#include "kgqa/llm/chat.hpp"
#include "kgqa/protocol/action.hpp"
#include "kgqa/protocol/session.hpp"

namespace kgqa::protocol {

struct Budgets {
  int maxRefinementTurns = 5;
  int maxKgCalls = 15;
  std::size_t searchLimit = 10;
  std::size_t relationLimit = 50;
  std::size_t traverseLimit = 20;
  std::size_t summaryRowCap = 50;
  std::chrono::milliseconds queryTimeout{60000};
};

enum class PromptWidget { wrongData, misunderstoodQuestion, newQuestion };

std::string_view to_string(PromptWidget widget);
PromptWidget widgetFromString(std::string_view text);
/// Editable text a widget proposes before the user changes it.
std::string_view widgetTemplate(PromptWidget widget);

/// Proof that a person asked for execution. Queries never run on their own.
struct UserApproval {};

/// Why `advance` returned.
enum class Pause { awaitingUser, queryReady, failed, done };

/// Drives the LLM through question refinement, KG exploration, query
/// generation and results summarization.
///
/// The engine holds no per-session state and may be shared; callers
/// serialise operations on any one Session.
class ProtocolEngine {
 public:
  using Clock = std::function<std::int64_t()>;
  using Observer = std::function<void(const Session&, const StateEvent&)>;

  /// Throws ConfigError when `kg` is null. Without a clock, event timestamps
  /// are event indices (deterministic under replay).
  ProtocolEngine(std::shared_ptr<const kg::KgBackend> kg, llm::ChatGateway gateway,
                 Budgets budgets = {}, Clock clock = {});

  void setObserver(Observer observer) { observer_ = std::move(observer); }

  const kg::KgBackend& kg() const { return *kg_; }
  const Budgets& budgets() const { return budgets_; }

  /// Installs the system prompt and the question. Throws ValidationError for
  /// an empty question.
  Session startSession(std::string question, std::string id = "session") const;

  /// Consumes one LLM turn and dispatches its action. KG and LLM failures
  /// are recorded as events; the session stays usable. Throws ProtocolError
  /// when the session is waiting on the user or the query gate.
  void step(Session& session, llm::Cassette& cassette) const;

  /// Answers an LLM clarification request.
  void replyToClarification(Session& session, std::string text) const;

  /// Prompts with few-shot examples and captures the LLM's BUILD_QUERY.
  /// Requires KG exploration to be complete.
  void generateQuery(Session& session, llm::Cassette& cassette) const;

  /// Runs the current query and asks the LLM for a summary of the results.
  void executeAndSummarize(Session& session, llm::Cassette& cassette, UserApproval) const;

  void applyPromptWidget(Session& session, PromptWidget widget, std::string editedText) const;

  /// Replaces the query with a user-edited one. Throws ParseError or
  /// UnsupportedFormError if it does not parse.
  void replaceQuery(Session& session, std::string sparql) const;

  /// Steps until the protocol waits on the user, the query is ready, or a
  /// failure stops it.
  Pause advance(Session& session, llm::Cassette& cassette) const;

 private:
  struct Turn;

  void emit(Session& s, Detail detail, EventKind kind, std::string note,
            std::optional<std::string> payload = std::nullopt) const;
  void setStage(Session& s, Detail detail, std::string note,
                std::optional<std::string> payload = std::nullopt) const;
  void inject(Session& s, std::string text) const;
  std::optional<llm::ChatMessage> callLlm(Session& s, llm::Cassette& c) const;
  std::optional<ParsedTurn> llmTurn(Session& s, llm::Cassette& c) const;
  void dispatch(Session& s, llm::Cassette& c, const ParsedTurn& turn, int repairsLeft) const;
  void exploreKg(Session& s, const Action& action, Detail next) const;
  void acceptQuery(Session& s, llm::Cassette& c, const BuildQuery& query, int repairsLeft) const;
  void reviewQuery(Session& s) const;
  void clearQueryState(Session& s) const;

  std::shared_ptr<const kg::KgBackend> kg_;
  llm::ChatGateway gateway_;
  Budgets budgets_;
  Clock clock_;
  Observer observer_;
};

/// System rules given to the LLM: the action grammar plus stage guidance.
std::string protocolRules();

/// Tab-separated rendering of up to `rowCap` rows, IRIs shortened to ids and
/// annotated with `labels` where known.
std::string serializeResults(const kg::SparqlResultTable& table, std::size_t rowCap,
                             const std::vector<kg::EntityRecord>& labels = {});

}  // namespace kgqa::protocol
