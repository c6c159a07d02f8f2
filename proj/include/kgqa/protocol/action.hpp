#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "kgqa/kg/types.hpp"
#include "kgqa/protocol/stage.hpp"

namespace kgqa::protocol {

struct Clarify {
  std::string question;
  bool operator==(const Clarify&) const = default;
};
struct WellFormed {
  bool operator==(const WellFormed&) const = default;
};
struct Search {
  std::string term;
  bool operator==(const Search&) const = default;
};
struct Properties {
  kg::EntityId entity;
  bool operator==(const Properties&) const = default;
};
struct Traverse {
  kg::EntityId head;
  kg::RelationId relation;
  bool operator==(const Traverse&) const = default;
};
struct BuildQuery {
  std::string sparql;
  std::string explanation;
  bool operator==(const BuildQuery&) const = default;
};
struct Stop {
  std::string reason;
  bool operator==(const Stop&) const = default;
};

using Action = std::variant<Clarify, WellFormed, Search, Properties, Traverse, BuildQuery, Stop>;

ActionKind kindOf(const Action& action);

/// An assistant turn split into its action and the prose around the block.
struct ParsedTurn {
  Action action;
  std::string prose;
};

/// Parses the single fenced block every assistant turn must carry:
///
///     ```action
///     SEARCH "Wimbledon 2019"
///     ```
///
/// Arguments are double-quoted strings (with \" and \\ escapes) or bare
/// tokens. BUILD_QUERY takes the query on the lines after the verb; the
/// prose outside the block is its explanation. Throws ActionParseError when
/// there is no block, more than one, an unknown verb or bad arguments.
ParsedTurn parseAction(std::string_view assistantText);

/// The grammar as given to the LLM in the system prompt.
std::string_view actionGrammar();

/// Renders an action as a block the parser accepts.
std::string formatAction(const Action& action);

}  // namespace kgqa::protocol
