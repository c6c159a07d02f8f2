#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace kgqa::protocol {

enum class Stage { QuestionRefinement, KGExploration, QueryGeneration, ResultsSummarization };

/// Sub-states shown in the state diagram. Each belongs to exactly one stage.
enum class Detail {
  awaitUser,
  llmClarifies,
  llmDeclaresWellFormed,
  fuzzySearchEntity,
  fetchRelations,
  traverse,
  idsComplete,
  fewShotPrompt,
  queryEmitted,
  executing,
  summarizing,
  done,
};

constexpr Stage stageOf(Detail d) {
  switch (d) {
    case Detail::awaitUser:
    case Detail::llmClarifies:
    case Detail::llmDeclaresWellFormed:
      return Stage::QuestionRefinement;
    case Detail::fuzzySearchEntity:
    case Detail::fetchRelations:
    case Detail::traverse:
    case Detail::idsComplete:
      return Stage::KGExploration;
    case Detail::fewShotPrompt:
    case Detail::queryEmitted:
      return Stage::QueryGeneration;
    case Detail::executing:
    case Detail::summarizing:
    case Detail::done:
      return Stage::ResultsSummarization;
  }
  return Stage::QuestionRefinement;
}

inline constexpr std::array<Detail, 12> kAllDetails = {
    Detail::awaitUser,     Detail::llmClarifies,  Detail::llmDeclaresWellFormed,
    Detail::fuzzySearchEntity, Detail::fetchRelations, Detail::traverse,
    Detail::idsComplete,   Detail::fewShotPrompt, Detail::queryEmitted,
    Detail::executing,     Detail::summarizing,   Detail::done,
};

struct SubState {
  Detail detail = Detail::awaitUser;

  constexpr Stage stage() const { return stageOf(detail); }
  bool operator==(const SubState&) const = default;
};

std::string_view to_string(Stage stage);
std::string_view to_string(Detail detail);
/// Human-readable "Stage -> sub-state" text, e.g.
/// "KG Exploration -> LLM fuzzy searches for entity".
std::string_view displayName(Stage stage);
std::string_view displayName(Detail detail);
Stage stageFromString(std::string_view text);
Detail detailFromString(std::string_view text);

enum class ActionKind { clarify, wellformed, search, properties, traverse, build_query, stop };

inline constexpr std::array<ActionKind, 7> kAllActionKinds = {
    ActionKind::clarify,    ActionKind::wellformed,  ActionKind::search, ActionKind::properties,
    ActionKind::traverse,   ActionKind::build_query, ActionKind::stop,
};

std::string_view to_string(ActionKind kind);

/// Legal LLM action from a sub-state and the sub-state it leads to.
struct Transition {
  Detail from;
  ActionKind action;
  Detail to;
};

/// The protocol's transition relation. Anything not listed is a protocol
/// error. Sub-states without rows wait on the user or on the system
/// (llmClarifies, idsComplete, queryEmitted and the summarization states).
inline constexpr std::array kTransitions = {
    Transition{Detail::awaitUser, ActionKind::clarify, Detail::llmClarifies},
    Transition{Detail::awaitUser, ActionKind::wellformed, Detail::llmDeclaresWellFormed},

    Transition{Detail::llmDeclaresWellFormed, ActionKind::search, Detail::fuzzySearchEntity},
    Transition{Detail::llmDeclaresWellFormed, ActionKind::properties, Detail::fetchRelations},
    Transition{Detail::llmDeclaresWellFormed, ActionKind::traverse, Detail::traverse},

    Transition{Detail::fuzzySearchEntity, ActionKind::search, Detail::fuzzySearchEntity},
    Transition{Detail::fuzzySearchEntity, ActionKind::properties, Detail::fetchRelations},
    Transition{Detail::fuzzySearchEntity, ActionKind::traverse, Detail::traverse},
    Transition{Detail::fuzzySearchEntity, ActionKind::stop, Detail::idsComplete},
    Transition{Detail::fetchRelations, ActionKind::search, Detail::fuzzySearchEntity},
    Transition{Detail::fetchRelations, ActionKind::properties, Detail::fetchRelations},
    Transition{Detail::fetchRelations, ActionKind::traverse, Detail::traverse},
    Transition{Detail::fetchRelations, ActionKind::stop, Detail::idsComplete},
    Transition{Detail::traverse, ActionKind::search, Detail::fuzzySearchEntity},
    Transition{Detail::traverse, ActionKind::properties, Detail::fetchRelations},
    Transition{Detail::traverse, ActionKind::traverse, Detail::traverse},
    Transition{Detail::traverse, ActionKind::stop, Detail::idsComplete},

    Transition{Detail::fewShotPrompt, ActionKind::build_query, Detail::queryEmitted},
    // missing-id repair
    Transition{Detail::fewShotPrompt, ActionKind::search, Detail::fuzzySearchEntity},
    Transition{Detail::fewShotPrompt, ActionKind::properties, Detail::fetchRelations},
    Transition{Detail::fewShotPrompt, ActionKind::traverse, Detail::traverse},
};

constexpr std::optional<Detail> nextDetail(Detail from, ActionKind action) {
  for (const auto& t : kTransitions) {
    if (t.from == from && t.action == action) return t.to;
  }
  return std::nullopt;
}

/// True when `from` accepts some LLM action.
constexpr bool takesLlmTurn(Detail from) {
  for (const auto& t : kTransitions) {
    if (t.from == from) return true;
  }
  return false;
}

}  // namespace kgqa::protocol
