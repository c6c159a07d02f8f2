#include "kgqa/protocol/action.hpp"

#include <cctype>
#include <vector>

#include "kgqa/error.hpp"

namespace kgqa::protocol {
namespace {

constexpr std::string_view kOpen = "```action";
constexpr std::string_view kFence = "```";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> splitArgs(std::string_view line) {
  std::vector<std::string> args;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::string arg;
    if (line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i];
        if (c == '\\' && i + 1 < line.size()) {
          const char e = line[i + 1];
          arg.push_back(e == 'n' ? '\n' : e);
          i += 2;
          continue;
        }
        if (c == '"') {
          closed = true;
          ++i;
          break;
        }
        arg.push_back(c);
        ++i;
      }
      if (!closed) throw ActionParseError("unterminated quoted argument");
    } else {
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
        arg.push_back(line[i++]);
      }
    }
    args.push_back(std::move(arg));
  }
  return args;
}

void requireArgs(std::string_view verb, const std::vector<std::string>& args, std::size_t n) {
  if (args.size() != n) {
    throw ActionParseError(std::string(verb) + " takes " + std::to_string(n) + " argument(s), got " +
                           std::to_string(args.size()));
  }
  for (const auto& a : args) {
    if (trim(a).empty()) throw ActionParseError(std::string(verb) + " argument is empty");
  }
}

template <typename Id>
Id parseId(std::string_view verb, const std::string& text) {
  try {
    return Id(trim(text));
  } catch (const ValidationError& e) {
    throw ActionParseError(std::string(verb) + ": " + e.what());
  }
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

ActionKind kindOf(const Action& action) {
  return std::visit(
      [](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Clarify>) return ActionKind::clarify;
        if constexpr (std::is_same_v<T, WellFormed>) return ActionKind::wellformed;
        if constexpr (std::is_same_v<T, Search>) return ActionKind::search;
        if constexpr (std::is_same_v<T, Properties>) return ActionKind::properties;
        if constexpr (std::is_same_v<T, Traverse>) return ActionKind::traverse;
        if constexpr (std::is_same_v<T, BuildQuery>) return ActionKind::build_query;
        return ActionKind::stop;
      },
      action);
}

ParsedTurn parseAction(std::string_view text) {
  const auto open = text.find(kOpen);
  if (open == std::string_view::npos) throw ActionParseError("no ```action block found");
  if (text.find(kOpen, open + kOpen.size()) != std::string_view::npos) {
    throw ActionParseError("more than one ```action block; send exactly one per turn");
  }
  auto bodyStart = text.find('\n', open);
  if (bodyStart == std::string_view::npos) throw ActionParseError("action block is empty");
  ++bodyStart;
  const auto close = text.find(kFence, bodyStart);
  if (close == std::string_view::npos) throw ActionParseError("action block is not closed");
  const auto body = text.substr(bodyStart, close - bodyStart);
  const auto prose = trim(std::string(text.substr(0, open)) + "\n" +
                          std::string(text.substr(close + kFence.size())));

  const auto body0 = body.find_first_not_of(" \t\r\n");
  if (body0 == std::string_view::npos) throw ActionParseError("action block is empty");
  auto lineEnd = body.find('\n', body0);
  const auto firstLine = body.substr(body0, lineEnd == std::string_view::npos
                                                ? std::string_view::npos
                                                : lineEnd - body0);
  const auto rest = lineEnd == std::string_view::npos ? std::string() : trim(body.substr(lineEnd));

  const auto verbEnd = firstLine.find_first_of(" \t\r");
  std::string verb(firstLine.substr(0, verbEnd));
  for (auto& c : verb) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const auto args =
      splitArgs(verbEnd == std::string_view::npos ? std::string_view() : firstLine.substr(verbEnd));

  if (verb == "BUILD_QUERY") {
    BuildQuery q;
    if (!args.empty()) {
      if (args.size() > 2) throw ActionParseError("BUILD_QUERY takes at most two quoted arguments");
      q.sparql = trim(args[0]);
      q.explanation = args.size() == 2 ? trim(args[1]) : prose;
      if (!rest.empty()) throw ActionParseError("BUILD_QUERY mixes quoted and multi-line forms");
    } else {
      q.sparql = rest;
      q.explanation = prose;
    }
    if (q.sparql.empty()) throw ActionParseError("BUILD_QUERY carries no query");
    if (q.explanation.empty()) {
      throw ActionParseError("BUILD_QUERY needs an explanation outside the action block");
    }
    return {std::move(q), prose};
  }
  if (!rest.empty()) throw ActionParseError(verb + " must fit on one line");
  if (verb == "CLARIFY") {
    requireArgs(verb, args, 1);
    return {Clarify{trim(args[0])}, prose};
  }
  if (verb == "WELLFORMED") {
    requireArgs(verb, args, 0);
    return {WellFormed{}, prose};
  }
  if (verb == "SEARCH") {
    requireArgs(verb, args, 1);
    return {Search{trim(args[0])}, prose};
  }
  if (verb == "PROPERTIES") {
    requireArgs(verb, args, 1);
    return {Properties{parseId<kg::EntityId>(verb, args[0])}, prose};
  }
  if (verb == "TRAVERSE") {
    requireArgs(verb, args, 2);
    return {Traverse{parseId<kg::EntityId>(verb, args[0]), parseId<kg::RelationId>(verb, args[1])},
            prose};
  }
  if (verb == "STOP") {
    requireArgs(verb, args, 1);
    return {Stop{trim(args[0])}, prose};
  }
  throw ActionParseError("unknown action verb '" + verb + "'");
}

std::string_view actionGrammar() {
  return R"(End every reply with exactly one action block, written as

```action
VERB arguments
```

Arguments are double-quoted strings. The verbs are:
- CLARIFY "question"    ask the user to clarify an ambiguous question (question refinement only)
- WELLFORMED            the question is clear enough; start exploring the knowledge graph
- SEARCH "text"         fuzzy search for entities by name
- PROPERTIES "Q123"     list the relations used on an entity
- TRAVERSE "Q123" "P45" follow a relation from an entity to its values
- STOP "reason"         you have found every entity and relation ID the query needs
- BUILD_QUERY           only when asked for the query: put the SPARQL query on the lines after
                        BUILD_QUERY inside the block, document each part with # comments, and
                        explain outside the block how the query answers the question.

The system answers SEARCH, PROPERTIES and TRAVERSE with knowledge graph data. Use only
identifiers that appear in those answers.)";
}

std::string formatAction(const Action& action) {
  std::string line = std::visit(
      [](const auto& a) -> std::string {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Clarify>) return "CLARIFY " + quote(a.question);
        if constexpr (std::is_same_v<T, WellFormed>) return "WELLFORMED";
        if constexpr (std::is_same_v<T, Search>) return "SEARCH " + quote(a.term);
        if constexpr (std::is_same_v<T, Properties>) return "PROPERTIES " + quote(a.entity.str());
        if constexpr (std::is_same_v<T, Traverse>) {
          return "TRAVERSE " + quote(a.head.str()) + " " + quote(a.relation.str());
        }
        if constexpr (std::is_same_v<T, BuildQuery>) return "BUILD_QUERY\n" + a.sparql;
        if constexpr (std::is_same_v<T, Stop>) return "STOP " + quote(a.reason);
      },
      action);
  std::string out;
  if (const auto* q = std::get_if<BuildQuery>(&action)) out = q->explanation + "\n\n";
  return out + "```action\n" + line + "\n```";
}

}  // namespace kgqa::protocol
