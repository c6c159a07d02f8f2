#include "kgqa/protocol/session.hpp"

#include <array>
#include <regex>
#include <utility>

namespace kgqa::protocol {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 11> kEventNames = {{
    {EventKind::transition, "transition"},
    {EventKind::user_message, "user_message"},
    {EventKind::rewind, "rewind"},
    {EventKind::reprompt, "reprompt"},
    {EventKind::protocol_error, "protocol_error"},
    {EventKind::hallucination, "hallucination"},
    {EventKind::notice, "notice"},
    {EventKind::warning, "warning"},
    {EventKind::budget, "budget"},
    {EventKind::empty_results, "empty_results"},
    {EventKind::error, "error"},
}};

char letter(Stage stage) {
  switch (stage) {
    case Stage::QuestionRefinement: return 'R';
    case Stage::KGExploration: return 'K';
    case Stage::QueryGeneration: return 'G';
    case Stage::ResultsSummarization: return 'S';
  }
  return '?';
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "";
}

EventKind eventKindFromString(std::string_view text) {
  for (const auto& [k, name] : kEventNames) {
    if (name == text) return k;
  }
  throw ValidationError("unknown event kind '" + std::string(text) + "'");
}

std::string stageTrace(const std::vector<StateEvent>& events) {
  std::string trace;
  trace.reserve(events.size());
  for (const auto& e : events) trace += letter(e.subState.stage());
  return trace;
}

bool traceMatchesProtocol(const std::vector<StateEvent>& events) {
  static const std::regex kShape("R+K+(G+K*)*G+S+");
  return std::regex_match(stageTrace(events), kShape);
}

}  // namespace kgqa::protocol
