#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa::sparql {

enum class TermKind { variable, iri, literal };

/// One position of a triple pattern.
///
/// `value` is the variable name without its sigil, the fully expanded IRI, or
/// the literal's lexical form. `written` is the surface spelling from the
/// query text ("wd:Q5", "?film", "10") and is what the editor and graph
/// labels show.
struct Term {
  TermKind kind = TermKind::variable;
  std::string value;
  std::string written;
  std::optional<std::string> datatype;
  std::optional<std::string> language;

  static Term variable(std::string name);
  static Term iri(std::string expanded, std::string written = {});
  static Term literal(std::string lexical, std::optional<std::string> datatype = std::nullopt,
                      std::optional<std::string> language = std::nullopt,
                      std::string written = {});

  bool isVariable() const noexcept { return kind == TermKind::variable; }
  /// Canonical N-Triples-like text; identical terms spelled differently
  /// (prefixed vs. full IRI) share a key.
  std::string key() const;

  bool operator==(const Term&) const = default;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  bool operator==(const Triple&) const = default;
};

struct ProjectionItem {
  std::string variable;
  /// Raw expression text for `(expr AS ?variable)` items.
  std::optional<std::string> expression;

  bool operator==(const ProjectionItem&) const = default;
};

struct Modifiers {
  bool distinct = false;
  bool reduced = false;
  std::optional<std::uint64_t> limit;
  std::optional<std::uint64_t> offset;
  std::optional<std::string> orderBy;
  std::optional<std::string> groupBy;
  std::optional<std::string> having;

  bool operator==(const Modifiers&) const = default;
};

/// A pattern element that is carried through but never graphed, such as
/// FILTER, OPTIONAL, BIND, VALUES, SERVICE, a nested group or a property-path
/// triple. `text` is the clause's tokens joined with single spaces.
struct Clause {
  std::string kind;
  std::string text;

  bool operator==(const Clause&) const = default;
};

/// A `#` comment. Line numbers are informational and do not take part in
/// equality.
struct Comment {
  int line = 0;
  std::string text;

  bool operator==(const Comment& other) const { return text == other.text; }
};

struct ParsedQuery {
  /// PREFIX declarations made by the query itself.
  std::map<std::string, std::string> prefixes;
  std::optional<std::string> base;
  bool selectAll = false;
  /// With `SELECT *` this is expanded to the pattern variables in first
  /// occurrence order.
  std::vector<ProjectionItem> projection;
  std::vector<Triple> triples;
  Modifiers modifiers;
  std::vector<Clause> unsupportedClauses;
  /// Projected variables that occur in no triple.
  std::vector<std::string> dangling;
  std::vector<Comment> comments;

  std::vector<std::string> projectedVariables() const;
  bool operator==(const ParsedQuery&) const = default;
};

/// Prefixes every query may use without declaring them: wd, wdt, p, ps, pq,
/// rdfs, plus rdf, xsd, schema, wikibase and bd.
const std::map<std::string, std::string>& builtinPrefixes();

/// Parses a SELECT query over basic graph patterns.
///
/// Throws UnsupportedFormError for ASK/CONSTRUCT/DESCRIBE/update forms and
/// ParseError (with line and column) for lexical or grammar failures.
ParsedQuery parseSelect(std::string_view text);

/// Writes the query back as SPARQL. parseSelect(serialize(q)) == q.
std::string serialize(const ParsedQuery& query);

}  // namespace kgqa::sparql
