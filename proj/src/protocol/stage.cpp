#include "kgqa/protocol/stage.hpp"

#include <string>

#include "kgqa/error.hpp"

namespace kgqa::protocol {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::QuestionRefinement: return "QuestionRefinement";
    case Stage::KGExploration: return "KGExploration";
    case Stage::QueryGeneration: return "QueryGeneration";
    case Stage::ResultsSummarization: return "ResultsSummarization";
  }
  return "QuestionRefinement";
}

std::string_view to_string(Detail detail) {
  switch (detail) {
    case Detail::awaitUser: return "awaitUser";
    case Detail::llmClarifies: return "llmClarifies";
    case Detail::llmDeclaresWellFormed: return "llmDeclaresWellFormed";
    case Detail::fuzzySearchEntity: return "fuzzySearchEntity";
    case Detail::fetchRelations: return "fetchRelations";
    case Detail::traverse: return "traverse";
    case Detail::idsComplete: return "idsComplete";
    case Detail::fewShotPrompt: return "fewShotPrompt";
    case Detail::queryEmitted: return "queryEmitted";
    case Detail::executing: return "executing";
    case Detail::summarizing: return "summarizing";
    case Detail::done: return "done";
  }
  return "awaitUser";
}

std::string_view displayName(Stage stage) {
  switch (stage) {
    case Stage::QuestionRefinement: return "Question Refinement";
    case Stage::KGExploration: return "KG Exploration";
    case Stage::QueryGeneration: return "Query Generation";
    case Stage::ResultsSummarization: return "Results Summarization";
  }
  return "";
}

std::string_view displayName(Detail detail) {
  switch (detail) {
    case Detail::awaitUser: return "user asks a question";
    case Detail::llmClarifies: return "LLM asks the user to clarify";
    case Detail::llmDeclaresWellFormed: return "LLM deems the question well-formed";
    case Detail::fuzzySearchEntity: return "LLM fuzzy searches for entity";
    case Detail::fetchRelations: return "LLM looks up relations of an entity";
    case Detail::traverse: return "LLM traverses the KG";
    case Detail::idsComplete: return "LLM has found all IDs";
    case Detail::fewShotPrompt: return "system provides few-shot examples";
    case Detail::queryEmitted: return "LLM writes the query";
    case Detail::executing: return "system executes the query";
    case Detail::summarizing: return "LLM summarizes the results";
    case Detail::done: return "results shown";
  }
  return "";
}

Stage stageFromString(std::string_view text) {
  for (auto s : {Stage::QuestionRefinement, Stage::KGExploration, Stage::QueryGeneration,
                 Stage::ResultsSummarization}) {
    if (to_string(s) == text) return s;
  }
  throw ValidationError("unknown stage '" + std::string(text) + "'");
}

Detail detailFromString(std::string_view text) {
  for (auto d : kAllDetails) {
    if (to_string(d) == text) return d;
  }
  throw ValidationError("unknown sub-state '" + std::string(text) + "'");
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::clarify: return "CLARIFY";
    case ActionKind::wellformed: return "WELLFORMED";
    case ActionKind::search: return "SEARCH";
    case ActionKind::properties: return "PROPERTIES";
    case ActionKind::traverse: return "TRAVERSE";
    case ActionKind::build_query: return "BUILD_QUERY";
    case ActionKind::stop: return "STOP";
  }
  return "";
}

}  // namespace kgqa::protocol
