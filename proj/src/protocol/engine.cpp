#include "kgqa/protocol/engine.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "kgqa/sparql/graph.hpp"
#include "kgqa/sparql/query.hpp"

namespace kgqa::protocol {

using llm::ChatMessage;
using llm::Origin;
using llm::Role;

namespace {

constexpr int kQueryRepairs = 1;

std::string recordsText(const std::vector<kg::EntityRecord>& records) {
  if (records.empty()) return "(no results)\n";
  std::string out;
  for (const auto& r : records) {
    out += "- " + r.id + " | " + r.label;
    if (!r.description.empty()) out += " | " + r.description;
    out += "\n";
  }
  return out;
}

void addDiscovered(Session& s, const std::vector<kg::EntityRecord>& records) {
  for (const auto& r : records) {
    const bool known = std::any_of(s.discovered.begin(), s.discovered.end(),
                                   [&](const auto& d) { return d.id == r.id; });
    if (!known) s.discovered.push_back(r);
  }
}

std::string shortId(const std::string& iri) {
  if (auto id = kg::idFromIri(iri)) return id->str();
  return iri;
}

}  // namespace

std::string_view to_string(PromptWidget widget) {
  switch (widget) {
    case PromptWidget::wrongData: return "wrongData";
    case PromptWidget::misunderstoodQuestion: return "misunderstoodQuestion";
    case PromptWidget::newQuestion: return "newQuestion";
  }
  return "";
}

PromptWidget widgetFromString(std::string_view text) {
  if (text == "wrongData") return PromptWidget::wrongData;
  if (text == "misunderstoodQuestion") return PromptWidget::misunderstoodQuestion;
  if (text == "newQuestion") return PromptWidget::newQuestion;
  throw ValidationError("unknown prompt widget '" + std::string(text) + "'");
}

std::string_view widgetTemplate(PromptWidget widget) {
  switch (widget) {
    case PromptWidget::wrongData:
      return "The data you identified does not look right for my question. Please search the "
             "knowledge graph again for different entities or relations.";
    case PromptWidget::misunderstoodQuestion:
      return "You misunderstood my question. What I meant is: ";
    case PromptWidget::newQuestion:
      return "I would like to ask a different question: ";
  }
  return "";
}

std::string protocolRules() {
  std::string rules(actionGrammar());
  rules +=
      "\n\nWork in stages. First make sure the question is clear (CLARIFY or WELLFORMED). "
      "Then find every entity and relation ID the query needs with SEARCH, PROPERTIES and "
      "TRAVERSE, and send STOP when you have them all. The system will then show you example "
      "queries and ask for yours; answer with BUILD_QUERY. If you discover an ID is missing "
      "while writing the query, you may SEARCH, PROPERTIES or TRAVERSE again.";
  return rules;
}

std::string serializeResults(const kg::SparqlResultTable& table, std::size_t rowCap,
                             const std::vector<kg::EntityRecord>& labels) {
  auto labelOf = [&](const std::string& id) -> std::string {
    for (const auto& r : labels) {
      if (r.id == id && r.resolvable) return r.label;
    }
    return {};
  };
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += "\t";
    out += table.columns[i];
  }
  out += "\n";
  const auto shown = std::min(rowCap, table.rows.size());
  for (std::size_t r = 0; r < shown; ++r) {
    for (std::size_t i = 0; i < table.rows[r].size(); ++i) {
      if (i) out += "\t";
      const auto& cell = table.rows[r][i];
      if (const auto* iri = std::get_if<kg::IriCell>(&cell)) {
        const auto id = shortId(iri->value);
        out += id;
        if (auto l = labelOf(id); !l.empty()) out += " (" + l + ")";
      } else {
        out += kg::cellText(cell);
      }
    }
    out += "\n";
  }
  if (table.rows.size() > shown) {
    out += "(" + std::to_string(table.rows.size() - shown) + " more rows not shown)\n";
  }
  return out;
}

ProtocolEngine::ProtocolEngine(std::shared_ptr<const kg::KgBackend> kg, llm::ChatGateway gateway,
                               Budgets budgets, Clock clock)
    : kg_(std::move(kg)),
      gateway_(std::move(gateway)),
      budgets_(budgets),
      clock_(std::move(clock)) {
  if (!kg_) throw ConfigError("protocol engine needs a knowledge graph backend");
  gateway_.config().validate();
}

void ProtocolEngine::emit(Session& s, Detail detail, EventKind kind, std::string note,
                          std::optional<std::string> payload) const {
  StateEvent e;
  e.index = s.events.size();
  e.timestamp = clock_ ? clock_() : static_cast<std::int64_t>(e.index);
  if (!s.events.empty()) e.timestamp = std::max(e.timestamp, s.events.back().timestamp);
  e.subState = SubState{detail};
  e.kind = kind;
  e.note = std::move(note);
  e.payloadRef = std::move(payload);
  s.events.push_back(std::move(e));
  if (observer_) observer_(s, s.events.back());
}

void ProtocolEngine::setStage(Session& s, Detail detail, std::string note,
                              std::optional<std::string> payload) const {
  s.stage = SubState{detail};
  emit(s, detail, EventKind::transition, std::move(note), std::move(payload));
}

void ProtocolEngine::inject(Session& s, std::string text) const {
  s.history.push_back(ChatMessage::system(std::move(text)));
}

Session ProtocolEngine::startSession(std::string question, std::string id) const {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ValidationError("question must not be empty");
  }
  Session s;
  s.id = std::move(id);
  s.question = question;
  s.history.push_back(llm::assembleSystemPrompt(kg_->describeSchema(), protocolRules()));
  s.history.push_back(ChatMessage::user(std::move(question)));
  setStage(s, Detail::awaitUser, "user asked: " + s.question, "message:1");
  return s;
}

std::optional<ChatMessage> ProtocolEngine::callLlm(Session& s, llm::Cassette& c) const {
  try {
    auto reply = gateway_.complete(s.history, c);
    ++s.llmCalls;
    s.history.push_back(reply);
    s.lastError.reset();
    return reply;
  } catch (const Error& e) {
    s.lastError = SessionError{e.kind(), e.what()};
    emit(s, s.stage.detail, EventKind::error, std::string("LLM call failed: ") + e.what());
    return std::nullopt;
  }
}

std::optional<ParsedTurn> ProtocolEngine::llmTurn(Session& s, llm::Cassette& c) const {
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = callLlm(s, c);
    if (!reply) return std::nullopt;
    try {
      return parseAction(reply->content);
    } catch (const ActionParseError& e) {
      if (attempt == 0) {
        emit(s, s.stage.detail, EventKind::reprompt,
             std::string("unreadable action (") + e.what() + "); restating the grammar",
             "message:" + std::to_string(s.history.size() - 1));
        inject(s, std::string("Your last reply could not be read: ") + e.what() + ".\n\n" +
                      std::string(actionGrammar()));
        continue;
      }
      s.lastError = SessionError{ErrorKind::action_parse, e.what()};
      emit(s, s.stage.detail, EventKind::protocol_error,
           std::string("unreadable action after reprompt: ") + e.what(),
           "message:" + std::to_string(s.history.size() - 1));
    }
  }
  return std::nullopt;
}

void ProtocolEngine::step(Session& s, llm::Cassette& c) const {
  if (s.awaitingUser) throw ProtocolError("session is waiting for the user's reply");
  const auto detail = s.stage.detail;
  if (detail == Detail::idsComplete) {
    generateQuery(s, c);
    return;
  }
  if (!takesLlmTurn(detail)) {
    throw ProtocolError(std::string("no LLM turn is due in state ") +
                        std::string(to_string(detail)));
  }
  if (auto turn = llmTurn(s, c)) dispatch(s, c, *turn, kQueryRepairs);
}

void ProtocolEngine::dispatch(Session& s, llm::Cassette& c, const ParsedTurn& turn,
                              int repairsLeft) const {
  const auto kind = kindOf(turn.action);
  const auto from = s.stage.detail;
  const auto next = nextDetail(from, kind);
  const auto payload = "message:" + std::to_string(s.history.size() - 1);
  if (!next) {
    std::string allowed;
    for (const auto& t : kTransitions) {
      if (t.from != from) continue;
      if (!allowed.empty()) allowed += ", ";
      allowed += to_string(t.action);
    }
    const std::string message = std::string(to_string(kind)) + " is not allowed during " +
                                std::string(displayName(stageOf(from))) + " (" +
                                std::string(to_string(from)) + ")";
    s.lastError = SessionError{ErrorKind::protocol, message};
    emit(s, from, EventKind::protocol_error, message, payload);
    inject(s, message + ". Allowed actions now: " + (allowed.empty() ? "none" : allowed) + ".");
    return;
  }

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Clarify>) {
          if (s.refinementTurns >= budgets_.maxRefinementTurns) {
            emit(s, from, EventKind::warning,
                 "question refinement exceeded " + std::to_string(budgets_.maxRefinementTurns) +
                     " turns; moving on to KG exploration");
            setStage(s, Detail::llmDeclaresWellFormed, "refinement turn cap reached", payload);
            inject(s,
                   "Clarification is over. Proceed with your best interpretation of the "
                   "question and start exploring the knowledge graph.");
            return;
          }
          ++s.refinementTurns;
          s.awaitingUser = true;
          setStage(s, Detail::llmClarifies, "LLM asks: " + a.question, payload);
        } else if constexpr (std::is_same_v<T, WellFormed>) {
          setStage(s, Detail::llmDeclaresWellFormed, "question is well-formed", payload);
          inject(s,
                 "Now find the entity and relation IDs the query needs with SEARCH, PROPERTIES "
                 "and TRAVERSE. Send STOP once you have all of them.");
        } else if constexpr (std::is_same_v<T, Stop>) {
          setStage(s, Detail::idsComplete, "all IDs found: " + a.reason, payload);
        } else if constexpr (std::is_same_v<T, BuildQuery>) {
          acceptQuery(s, c, a, repairsLeft);
        } else {
          exploreKg(s, turn.action, *next);
        }
      },
      turn.action);
}

void ProtocolEngine::exploreKg(Session& s, const Action& action, Detail next) const {
  if (s.kgCalls >= budgets_.maxKgCalls) {
    emit(s, s.stage.detail, EventKind::budget,
         "KG call budget of " + std::to_string(budgets_.maxKgCalls) +
             " exhausted; moving on to query generation");
    setStage(s, Detail::idsComplete, "exploration stopped by budget");
    return;
  }
  ++s.kgCalls;
  std::string note;
  std::string header;
  if (const auto* a = std::get_if<Search>(&action)) {
    note = "search \"" + a->term + "\"";
    header = "Search results for \"" + a->term + "\" (id | label | description):\n";
  } else if (const auto* a = std::get_if<Properties>(&action)) {
    note = "relations of " + a->entity.str();
    header = "Relations used on " + a->entity.str() + " (id | label | description):\n";
  } else if (const auto* a = std::get_if<Traverse>(&action)) {
    note = "traverse " + a->head.str() + " " + a->relation.str();
    header = "Values of " + a->relation.str() + " on " + a->head.str() +
             " (id | label | description):\n";
  }
  setStage(s, next, note, "message:" + std::to_string(s.history.size() - 1));
  try {
    std::vector<kg::EntityRecord> records;
    if (const auto* a = std::get_if<Search>(&action)) {
      records = kg_->fuzzySearchEntities(a->term, budgets_.searchLimit);
    } else if (const auto* a = std::get_if<Properties>(&action)) {
      records = kg_->getRelationsForEntity(a->entity, budgets_.relationLimit);
    } else if (const auto* a = std::get_if<Traverse>(&action)) {
      records = kg_->traverse(a->head, a->relation, budgets_.traverseLimit);
    }
    addDiscovered(s, records);
    inject(s, header + recordsText(records));
  } catch (const Error& e) {
    emit(s, next, EventKind::error, std::string("KG call failed: ") + e.what());
    inject(s, std::string("The knowledge graph call failed: ") + e.what());
  }
}

void ProtocolEngine::generateQuery(Session& s, llm::Cassette& c) const {
  if (s.awaitingUser || s.stage.detail != Detail::idsComplete) {
    throw ProtocolError("query generation needs KG exploration to be complete");
  }
  const auto examples = kg_->fewShotExamples();
  const auto shots = llm::assembleFewShot(examples, [](const kg::FewShotExample& ex) {
    return formatAction(BuildQuery{ex.sparql, "This query answers: " + ex.question});
  });
  std::string ids;
  for (const auto& r : s.discovered) ids += "- " + r.id + " (" + r.label + ")\n";
  inject(s,
         "Here are example questions with queries written for this knowledge graph. Write a "
         "SPARQL SELECT query in the same style.");
  s.history.insert(s.history.end(), shots.begin(), shots.end());
  inject(s, "Write the SPARQL query for the user's question \"" + s.question +
                "\" using only these IDs:\n" + (ids.empty() ? "(none found)\n" : ids) +
                "Answer with BUILD_QUERY.");
  setStage(s, Detail::fewShotPrompt,
           std::to_string(examples.size()) + " few-shot examples provided");
  if (auto turn = llmTurn(s, c)) dispatch(s, c, *turn, kQueryRepairs);
}

void ProtocolEngine::acceptQuery(Session& s, llm::Cassette& c, const BuildQuery& query,
                                 int repairsLeft) const {
  sparql::ParsedQuery parsed;
  try {
    parsed = sparql::parseSelect(query.sparql);
  } catch (const Error& e) {
    if (repairsLeft > 0) {
      emit(s, s.stage.detail, EventKind::reprompt,
           std::string("query rejected (") + e.what() + "); asking for a fix",
           "message:" + std::to_string(s.history.size() - 1));
      inject(s, std::string("The query could not be parsed: ") + e.what() +
                    "\nSend a corrected SPARQL SELECT query with BUILD_QUERY.");
      if (auto turn = llmTurn(s, c)) dispatch(s, c, *turn, repairsLeft - 1);
      return;
    }
    s.lastError = SessionError{ErrorKind::generation, e.what()};
    emit(s, s.stage.detail, EventKind::error,
         std::string("query generation failed: ") + e.what());
    return;
  }
  GeneratedQuery generated;
  generated.sparql = query.sparql;
  generated.explanation = query.explanation;
  for (const auto& comment : parsed.comments) {
    const auto first = comment.text.find_first_not_of(' ');
    generated.inlineComments.push_back(first == std::string::npos ? std::string()
                                                                  : comment.text.substr(first));
  }
  generated.origin = Origin::llm;
  s.generatedQuery = std::move(generated);
  setStage(s, Detail::queryEmitted, "query generated", "query");
  reviewQuery(s);
}

void ProtocolEngine::reviewQuery(Session& s) const {
  s.entityTable.clear();
  s.hallucinatedIds.clear();
  const auto parsed = sparql::parseSelect(s.generatedQuery->sparql);
  const auto extraction = sparql::extractIds(parsed);

  std::set<std::string> known;
  for (const auto& r : s.discovered) known.insert(r.id);
  static const std::regex kIdPattern(R"(\b[QP][1-9][0-9]*\b)");
  for (const auto& m : s.history) {
    if (m.origin != Origin::system_injected) continue;
    for (std::sregex_iterator it(m.content.begin(), m.content.end(), kIdPattern), end; it != end;
         ++it) {
      known.insert(it->str());
    }
  }
  std::vector<std::string> unseen;
  for (const auto& id : extraction.ids) {
    if (!known.contains(id.str())) unseen.push_back(id.str());
  }

  std::vector<std::string> unknown;
  try {
    s.entityTable = sparql::buildEntityRelationTable(extraction.ids, *kg_);
    for (const auto& r : s.entityTable) {
      if (!r.resolvable) unknown.push_back(r.id);
    }
  } catch (const Error& e) {
    emit(s, s.stage.detail, EventKind::error,
         std::string("entity-relation lookup failed: ") + e.what());
  }

  auto join = [](const std::vector<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
    return out;
  };
  std::set<std::string> flagged(unseen.begin(), unseen.end());
  flagged.insert(unknown.begin(), unknown.end());
  for (const auto& id : extraction.ids) {
    if (flagged.contains(id.str())) s.hallucinatedIds.push_back(id.str());
  }
  if (!unseen.empty()) {
    emit(s, s.stage.detail, EventKind::hallucination,
         "query uses IDs never returned by the knowledge graph: " + join(unseen), "query");
  }
  if (!unknown.empty()) {
    emit(s, s.stage.detail, EventKind::hallucination,
         "query uses IDs the knowledge graph does not know: " + join(unknown), "query");
  }
  if (!parsed.unsupportedClauses.empty()) {
    std::string kinds;
    for (const auto& clause : parsed.unsupportedClauses) {
      if (kinds.find(clause.kind) == std::string::npos) {
        kinds += (kinds.empty() ? "" : ", ") + clause.kind;
      }
    }
    emit(s, s.stage.detail, EventKind::notice, "not shown in the query graph: " + kinds, "query");
  }
}

void ProtocolEngine::replaceQuery(Session& s, std::string sparqlText) const {
  auto parsed = sparql::parseSelect(sparqlText);
  GeneratedQuery q;
  q.sparql = std::move(sparqlText);
  q.explanation = "Edited by the user.";
  for (const auto& comment : parsed.comments) q.inlineComments.push_back(comment.text);
  q.origin = Origin::human;
  s.generatedQuery = std::move(q);
  s.results.reset();
  s.summary.reset();
  s.awaitingUser = false;
  s.lastError.reset();
  setStage(s, Detail::queryEmitted, "query edited by the user", "query");
  reviewQuery(s);
}

void ProtocolEngine::replyToClarification(Session& s, std::string text) const {
  if (!s.awaitingUser) throw ProtocolError("the LLM has not asked for clarification");
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ValidationError("reply must not be empty");
  }
  s.history.push_back(ChatMessage::user(std::move(text)));
  s.awaitingUser = false;
  setStage(s, Detail::awaitUser, "user replied",
           "message:" + std::to_string(s.history.size() - 1));
}

void ProtocolEngine::executeAndSummarize(Session& s, llm::Cassette& c, UserApproval) const {
  if (!s.generatedQuery) throw ProtocolError("there is no query to execute");
  s.results.reset();
  s.summary.reset();
  setStage(s, Detail::executing, "executing query", "query");
  try {
    s.results = kg_->executeSparql(s.generatedQuery->sparql, budgets_.queryTimeout);
    s.lastError.reset();
  } catch (const Error& e) {
    s.lastError = SessionError{e.kind(), e.what()};
    emit(s, Detail::executing, EventKind::error, std::string("query execution failed: ") + e.what());
    return;
  }
  const auto& table = *s.results;
  if (table.rows.empty()) {
    emit(s, Detail::executing, EventKind::empty_results,
         "empty results: the query matched nothing", "results");
  }

  std::vector<kg::KgId> ids;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < std::min(budgets_.summaryRowCap, table.rows.size()); ++r) {
    for (const auto& cell : table.rows[r]) {
      if (const auto* iri = std::get_if<kg::IriCell>(&cell)) {
        if (auto id = kg::idFromIri(iri->value); id && seen.insert(id->str()).second) {
          ids.push_back(*id);
        }
      }
    }
  }
  std::vector<kg::EntityRecord> labels;
  if (!ids.empty()) {
    try {
      labels = kg_->getRecords(ids);
    } catch (const Error&) {
      // Labels only decorate the summary prompt.
    }
  }

  setStage(s, Detail::summarizing,
           std::to_string(table.rows.size()) + " result rows; summarizing", "results");
  inject(s, "The query returned " + std::to_string(table.rows.size()) + " rows" +
                (table.rows.size() > budgets_.summaryRowCap
                     ? " (first " + std::to_string(budgets_.summaryRowCap) + " shown)"
                     : std::string()) +
                ":\n" + serializeResults(table, budgets_.summaryRowCap, labels) +
                "\nSummarize these results for the user in plain language, without an action "
                "block. Finish with one line of the form \"Answer: <answer>\".");
  auto reply = callLlm(s, c);
  if (!reply) return;
  if (reply->content.find("```action") != std::string::npos) {
    std::string verb = "an action";
    try {
      verb = std::string(to_string(kindOf(parseAction(reply->content).action)));
    } catch (const ActionParseError&) {
    }
    const std::string message =
        verb + " is not allowed during Results Summarization (summarizing)";
    s.lastError = SessionError{ErrorKind::protocol, message};
    emit(s, Detail::summarizing, EventKind::protocol_error, message,
         "message:" + std::to_string(s.history.size() - 1));
    return;
  }
  s.summary = reply->content;
  setStage(s, Detail::done, "summary ready", "message:" + std::to_string(s.history.size() - 1));
}

void ProtocolEngine::clearQueryState(Session& s) const {
  s.generatedQuery.reset();
  s.results.reset();
  s.summary.reset();
  s.entityTable.clear();
  s.hallucinatedIds.clear();
  s.awaitingUser = false;
  s.lastError.reset();
}

void ProtocolEngine::applyPromptWidget(Session& s, PromptWidget widget,
                                       std::string editedText) const {
  if (editedText.find_first_not_of(" \t\r\n") == std::string::npos) {
    editedText = std::string(widgetTemplate(widget));
  }
  clearQueryState(s);
  s.history.push_back(ChatMessage::user(editedText));
  const auto payload = "message:" + std::to_string(s.history.size() - 1);
  switch (widget) {
    case PromptWidget::wrongData:
      s.kgCalls = 0;
      s.stage = SubState{Detail::fuzzySearchEntity};
      emit(s, Detail::fuzzySearchEntity, EventKind::rewind, "user reports wrong data", payload);
      inject(s,
             "Continue exploring the knowledge graph with SEARCH, PROPERTIES and TRAVERSE, and "
             "send STOP once you have the right IDs.");
      break;
    case PromptWidget::misunderstoodQuestion:
      s.refinementTurns = 0;
      s.stage = SubState{Detail::awaitUser};
      emit(s, Detail::awaitUser, EventKind::rewind, "user reports a misunderstood question",
           payload);
      break;
    case PromptWidget::newQuestion:
      s.question = editedText;
      s.discovered.clear();
      s.refinementTurns = 0;
      s.kgCalls = 0;
      s.stage = SubState{Detail::awaitUser};
      emit(s, Detail::awaitUser, EventKind::rewind, "user asks a new question", payload);
      break;
  }
}

Pause ProtocolEngine::advance(Session& s, llm::Cassette& c) const {
  int consecutiveProtocolErrors = 0;
  for (int guard = 0; guard < 64; ++guard) {
    if (s.awaitingUser) return Pause::awaitingUser;
    const auto detail = s.stage.detail;
    if (detail == Detail::queryEmitted) return Pause::queryReady;
    if (detail == Detail::done) return Pause::done;
    if (detail != Detail::idsComplete && !takesLlmTurn(detail)) return Pause::failed;

    const auto before = s.events.size();
    step(s, c);
    bool failed = false;
    bool protocolError = false;
    for (auto i = before; i < s.events.size(); ++i) {
      const auto& e = s.events[i];
      if (e.kind == EventKind::protocol_error) protocolError = true;
      if (e.kind == EventKind::error && s.lastError) failed = true;
    }
    if (failed) return Pause::failed;
    if (s.lastError && s.lastError->kind == ErrorKind::generation) return Pause::failed;
    consecutiveProtocolErrors = protocolError ? consecutiveProtocolErrors + 1 : 0;
    if (consecutiveProtocolErrors >= 3) return Pause::failed;
  }
  s.lastError = SessionError{ErrorKind::protocol, "protocol did not settle within 64 turns"};
  return Pause::failed;
}

}  // namespace kgqa::protocol
