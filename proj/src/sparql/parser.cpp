#include <algorithm>
#include <charconv>
#include <set>

#include "kgqa/error.hpp"
#include "kgqa/sparql/query.hpp"
#include "lexer.hpp"

namespace kgqa::sparql {
namespace {

using detail::Token;
using detail::TokenType;

constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";
constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string escapeLiteral(std::string_view value) {
  std::string out;
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) {
    auto lexed = detail::tokenize(text);
    tokens_ = std::move(lexed.tokens);
    query_.comments = std::move(lexed.comments);
  }

  ParsedQuery run() {
    parsePrologue();
    const auto& head = peek();
    const auto keyword = upper(head.text);
    if (head.type == TokenType::name &&
        (keyword == "ASK" || keyword == "CONSTRUCT" || keyword == "DESCRIBE" ||
         keyword == "INSERT" || keyword == "DELETE" || keyword == "LOAD" || keyword == "CLEAR" ||
         keyword == "DROP" || keyword == "CREATE" || keyword == "WITH")) {
      throw UnsupportedFormError("only SELECT queries are supported, found " + keyword);
    }
    if (!isKeyword(head, "SELECT")) fail(head, "expected SELECT");
    next();
    parseSelectClause();
    while (isKeyword(peek(), "FROM")) {
      const auto begin = pos_;
      next();
      if (isKeyword(peek(), "NAMED")) next();
      parseIri(next());
      query_.unsupportedClauses.push_back({"FROM", detail::joinTokens(tokens_, begin, pos_)});
    }
    if (isKeyword(peek(), "WHERE")) next();
    expectPunct("{");
    parseGroupBody();
    expectPunct("}");
    parseSolutionModifiers();
    if (peek().type != TokenType::end) fail(peek(), "unexpected trailing input");
    finish();
    return std::move(query_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() {
    const auto& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  [[noreturn]] static void fail(const Token& at, const std::string& message) {
    std::string found = at.type == TokenType::end ? "end of input" : "'" + at.source + "'";
    throw ParseError(message + " (found " + found + ")", at.line, at.column);
  }

  static bool isKeyword(const Token& t, std::string_view word) {
    return t.type == TokenType::name && upper(t.text) == word;
  }
  static bool isPunct(const Token& t, std::string_view p) {
    return t.type == TokenType::punct && t.text == p;
  }
  void expectPunct(std::string_view p) {
    if (!isPunct(peek(), p)) fail(peek(), "expected '" + std::string(p) + "'");
    next();
  }

  void parsePrologue() {
    while (true) {
      if (isKeyword(peek(), "PREFIX")) {
        next();
        const auto& name = next();
        if (name.type != TokenType::pname || name.text.back() != ':' ||
            std::count(name.text.begin(), name.text.end(), ':') != 1) {
          fail(name, "expected prefix name");
        }
        const auto& iri = next();
        if (iri.type != TokenType::iri_ref) fail(iri, "expected IRI in PREFIX");
        query_.prefixes[name.text.substr(0, name.text.size() - 1)] = iri.text;
      } else if (isKeyword(peek(), "BASE")) {
        next();
        const auto& iri = next();
        if (iri.type != TokenType::iri_ref) fail(iri, "expected IRI in BASE");
        query_.base = iri.text;
      } else {
        return;
      }
    }
  }

  void parseSelectClause() {
    if (isKeyword(peek(), "DISTINCT")) {
      next();
      query_.modifiers.distinct = true;
    } else if (isKeyword(peek(), "REDUCED")) {
      next();
      query_.modifiers.reduced = true;
    }
    if (isPunct(peek(), "*")) {
      next();
      query_.selectAll = true;
      return;
    }
    while (true) {
      const auto& t = peek();
      if (t.type == TokenType::variable) {
        next();
        query_.projection.push_back({t.text, std::nullopt});
      } else if (isPunct(t, "(")) {
        next();
        const auto exprBegin = pos_;
        int depth = 0;
        while (!(depth == 0 && isKeyword(peek(), "AS"))) {
          if (peek().type == TokenType::end) fail(peek(), "unterminated projection expression");
          if (isPunct(peek(), "(")) ++depth;
          if (isPunct(peek(), ")")) --depth;
          if (depth < 0) fail(peek(), "expected AS in projection expression");
          next();
        }
        if (pos_ == exprBegin) fail(peek(), "empty projection expression");
        auto expr = detail::joinTokens(tokens_, exprBegin, pos_);
        next();  // AS
        const auto& var = next();
        if (var.type != TokenType::variable) fail(var, "expected variable after AS");
        expectPunct(")");
        query_.projection.push_back({var.text, std::move(expr)});
      } else {
        break;
      }
    }
    if (query_.projection.empty()) fail(peek(), "expected projection variables or '*'");
  }

  // Skips a balanced bracket run starting at the current opening token.
  void skipBalanced(std::string_view open, std::string_view close) {
    const auto& start = peek();
    if (!isPunct(start, open)) fail(start, "expected '" + std::string(open) + "'");
    int depth = 0;
    do {
      const auto& t = next();
      if (t.type == TokenType::end) fail(start, "unbalanced '" + std::string(open) + "'");
      if (isPunct(t, open)) ++depth;
      if (isPunct(t, close)) --depth;
    } while (depth > 0);
  }

  void addClause(std::string kind, std::size_t begin) {
    query_.unsupportedClauses.push_back({std::move(kind), detail::joinTokens(tokens_, begin, pos_)});
  }

  void parseGroupBody() {
    while (true) {
      const auto& t = peek();
      if (isPunct(t, "}") || t.type == TokenType::end) return;
      if (isPunct(t, ".")) {
        next();
        continue;
      }
      const auto begin = pos_;
      const auto keyword = t.type == TokenType::name ? upper(t.text) : std::string();
      if (keyword == "FILTER") {
        next();
        parseConstraint();
        addClause("FILTER", begin);
      } else if (keyword == "OPTIONAL" || keyword == "MINUS") {
        next();
        skipBalanced("{", "}");
        addClause(keyword, begin);
      } else if (keyword == "SERVICE" || keyword == "GRAPH") {
        next();
        if (isKeyword(peek(), "SILENT")) next();
        const auto& target = next();
        if (target.type != TokenType::iri_ref && target.type != TokenType::pname &&
            target.type != TokenType::variable) {
          fail(target, "expected IRI or variable after " + keyword);
        }
        skipBalanced("{", "}");
        addClause(keyword, begin);
      } else if (keyword == "BIND") {
        next();
        skipBalanced("(", ")");
        addClause("BIND", begin);
      } else if (keyword == "VALUES") {
        next();
        parseDataBlock();
        addClause("VALUES", begin);
      } else if (isPunct(t, "{")) {
        skipBalanced("{", "}");
        bool isUnion = false;
        while (isKeyword(peek(), "UNION")) {
          next();
          skipBalanced("{", "}");
          isUnion = true;
        }
        addClause(isUnion ? "UNION" : "GROUP", begin);
      } else {
        parseTriplesSameSubject();
        if (isPunct(peek(), ".")) {
          next();
        } else if (!isPunct(peek(), "}") && !startsNonTriples(peek())) {
          fail(peek(), "expected '.' or '}' after triple pattern");
        }
      }
    }
  }

  static bool startsNonTriples(const Token& t) {
    if (isPunct(t, "{")) return true;
    if (t.type != TokenType::name) return false;
    const auto k = upper(t.text);
    return k == "FILTER" || k == "OPTIONAL" || k == "MINUS" || k == "SERVICE" || k == "GRAPH" ||
           k == "BIND" || k == "VALUES";
  }

  void parseConstraint() {
    const auto& t = peek();
    if (isPunct(t, "(")) {
      skipBalanced("(", ")");
    } else if (isKeyword(t, "NOT")) {
      next();
      if (!isKeyword(peek(), "EXISTS")) fail(peek(), "expected EXISTS after NOT");
      next();
      skipBalanced("{", "}");
    } else if (isKeyword(t, "EXISTS")) {
      next();
      skipBalanced("{", "}");
    } else if (t.type == TokenType::name || t.type == TokenType::pname ||
               t.type == TokenType::iri_ref) {
      next();
      skipBalanced("(", ")");
    } else {
      fail(t, "expected constraint after FILTER");
    }
  }

  void parseDataBlock() {
    if (peek().type == TokenType::variable) {
      next();
    } else {
      skipBalanced("(", ")");
    }
    skipBalanced("{", "}");
  }

  Term parseIri(const Token& t) {
    if (t.type == TokenType::iri_ref) {
      std::string expanded = t.text;
      if (query_.base && expanded.find(':') == std::string::npos) expanded = *query_.base + expanded;
      return Term::iri(expanded, t.source);
    }
    if (t.type == TokenType::pname) {
      const auto colon = t.text.find(':');
      const auto prefix = t.text.substr(0, colon);
      const auto local = t.text.substr(colon + 1);
      auto declared = query_.prefixes.find(prefix);
      if (declared != query_.prefixes.end()) return Term::iri(declared->second + local, t.text);
      const auto& builtin = builtinPrefixes();
      auto it = builtin.find(prefix);
      if (it == builtin.end()) fail(t, "unknown prefix '" + prefix + ":'");
      return Term::iri(it->second + local, t.text);
    }
    fail(t, "expected IRI");
  }

  Term parseVarOrTerm(bool allowLiteral) {
    const auto& t = peek();
    switch (t.type) {
      case TokenType::variable:
        next();
        return Term::variable(t.text);
      case TokenType::iri_ref:
      case TokenType::pname:
        next();
        return parseIri(t);
      case TokenType::blank_node:
        fail(t, "blank nodes are not supported");
      case TokenType::string:
      case TokenType::number:
        if (!allowLiteral) fail(t, "literal not allowed here");
        return parseLiteral();
      case TokenType::name:
        if (allowLiteral && (t.text == "true" || t.text == "false")) {
          next();
          return Term::literal(t.text, std::string(kXsd) + "boolean", std::nullopt, t.text);
        }
        fail(t, "expected variable, IRI or literal");
      case TokenType::punct:
        if (isPunct(t, "[")) fail(t, "blank nodes are not supported");
        if (allowLiteral && (isPunct(t, "-") || isPunct(t, "+")) &&
            peek(1).type == TokenType::number) {
          return parseLiteral();
        }
        fail(t, "expected variable, IRI or literal");
      default:
        fail(t, "expected variable, IRI or literal");
    }
  }

  Term parseLiteral() {
    const auto begin = pos_;
    const auto& t = next();
    if (t.type == TokenType::number || isPunct(t, "-") || isPunct(t, "+")) {
      std::string lexical = t.type == TokenType::number ? t.text : t.text + next().text;
      const std::string type = lexical.find_first_of("eE") != std::string::npos ? "double"
                               : lexical.find('.') != std::string::npos       ? "decimal"
                                                                              : "integer";
      return Term::literal(lexical, std::string(kXsd) + type, std::nullopt,
                           detail::joinTokens(tokens_, begin, pos_));
    }
    std::optional<std::string> datatype;
    std::optional<std::string> language;
    if (peek().type == TokenType::lang_tag) {
      language = next().text;
    } else if (isPunct(peek(), "^^")) {
      next();
      datatype = parseIri(next()).value;
    }
    return Term::literal(t.text, datatype, language, detail::joinTokens(tokens_, begin, pos_));
  }

  bool atPathOperator() const {
    const auto& t = peek();
    return isPunct(t, "/") || isPunct(t, "|") || isPunct(t, "*") || isPunct(t, "+") ||
           (isPunct(t, "?") && peek(1).type != TokenType::variable);
  }

  // Consumes one path primary with optional modifiers.
  void skipPathElement() {
    while (isPunct(peek(), "^") || isPunct(peek(), "!")) next();
    const auto& t = peek();
    if (isPunct(t, "(")) {
      skipBalanced("(", ")");
    } else if (t.type == TokenType::iri_ref || t.type == TokenType::pname ||
               (t.type == TokenType::name && t.text == "a")) {
      if (t.type != TokenType::name) parseIri(t);
      next();
    } else {
      fail(t, "expected IRI in property path");
    }
    while (isPunct(peek(), "*") || isPunct(peek(), "+") ||
           (isPunct(peek(), "?") && peek(1).type != TokenType::variable)) {
      next();
    }
  }

  void parseTriplesSameSubject() {
    const auto subjectToken = pos_;
    Term subject = parseVarOrTerm(false);
    const auto subjectEnd = pos_;
    while (true) {
      // Verb
      const auto verbBegin = pos_;
      const auto& v = peek();
      bool isPath = isPunct(v, "^") || isPunct(v, "!") || isPunct(v, "(");
      Term predicate;
      if (!isPath) {
        if (v.type == TokenType::name && v.text == "a") {
          next();
          predicate = Term::iri(std::string(kRdfType), "a");
        } else if (v.type == TokenType::variable) {
          next();
          predicate = Term::variable(v.text);
        } else if (v.type == TokenType::iri_ref || v.type == TokenType::pname) {
          next();
          predicate = parseIri(v);
        } else {
          fail(v, "expected predicate");
        }
        isPath = predicate.kind == TermKind::iri && atPathOperator();
      }
      if (isPath) {
        pos_ = verbBegin;
        skipPathElement();
        while (isPunct(peek(), "/") || isPunct(peek(), "|")) {
          next();
          skipPathElement();
        }
      }
      const auto verbEnd = pos_;

      // Object list
      while (true) {
        const auto objectBegin = pos_;
        Term object = parseVarOrTerm(true);
        if (isPath) {
          std::string text = detail::joinTokens(tokens_, subjectToken, subjectEnd) + " " +
                             detail::joinTokens(tokens_, verbBegin, verbEnd) + " " +
                             detail::joinTokens(tokens_, objectBegin, pos_);
          query_.unsupportedClauses.push_back({"PATH", std::move(text)});
        } else {
          query_.triples.push_back({subject, predicate, std::move(object)});
        }
        if (!isPunct(peek(), ",")) break;
        next();
      }
      if (!isPunct(peek(), ";")) return;
      while (isPunct(peek(), ";")) next();
      const auto& after = peek();
      if (isPunct(after, ".") || isPunct(after, "}") || after.type == TokenType::end) return;
    }
  }

  std::uint64_t parseUnsigned(const Token& t) {
    std::uint64_t value = 0;
    const auto* first = t.text.data();
    const auto* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (t.type != TokenType::number || ec != std::errc() || ptr != last) {
      fail(t, "expected non-negative integer");
    }
    return value;
  }

  bool atModifierKeyword() const {
    const auto& t = peek();
    return t.type == TokenType::end || isKeyword(t, "GROUP") || isKeyword(t, "HAVING") ||
           isKeyword(t, "ORDER") || isKeyword(t, "LIMIT") || isKeyword(t, "OFFSET") ||
           isKeyword(t, "VALUES");
  }

  std::string takeUntilModifier(std::string_view what) {
    const auto begin = pos_;
    while (!atModifierKeyword()) next();
    if (pos_ == begin) fail(peek(), "empty " + std::string(what) + " clause");
    return detail::joinTokens(tokens_, begin, pos_);
  }

  void parseSolutionModifiers() {
    if (isKeyword(peek(), "GROUP")) {
      next();
      if (!isKeyword(peek(), "BY")) fail(peek(), "expected BY after GROUP");
      next();
      query_.modifiers.groupBy = takeUntilModifier("GROUP BY");
    }
    if (isKeyword(peek(), "HAVING")) {
      next();
      query_.modifiers.having = takeUntilModifier("HAVING");
    }
    if (isKeyword(peek(), "ORDER")) {
      next();
      if (!isKeyword(peek(), "BY")) fail(peek(), "expected BY after ORDER");
      next();
      query_.modifiers.orderBy = takeUntilModifier("ORDER BY");
    }
    for (int i = 0; i < 2; ++i) {
      if (isKeyword(peek(), "LIMIT") && !query_.modifiers.limit) {
        next();
        query_.modifiers.limit = parseUnsigned(next());
      } else if (isKeyword(peek(), "OFFSET") && !query_.modifiers.offset) {
        next();
        query_.modifiers.offset = parseUnsigned(next());
      }
    }
    if (isKeyword(peek(), "VALUES")) {
      const auto begin = pos_;
      next();
      parseDataBlock();
      addClause("VALUES", begin);
    }
  }

  void finish() {
    std::vector<std::string> patternVars;
    std::set<std::string> seen;
    for (const auto& t : query_.triples) {
      for (const Term* term : {&t.subject, &t.predicate, &t.object}) {
        if (term->isVariable() && seen.insert(term->value).second) {
          patternVars.push_back(term->value);
        }
      }
    }
    if (query_.selectAll) {
      query_.projection.clear();
      for (const auto& v : patternVars) query_.projection.push_back({v, std::nullopt});
    }
    std::set<std::string> projected;
    for (const auto& item : query_.projection) {
      if (!projected.insert(item.variable).second) {
        throw ParseError("variable ?" + item.variable + " projected twice", 1, 1);
      }
      if (!seen.contains(item.variable)) query_.dangling.push_back(item.variable);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  ParsedQuery query_;
};

}  // namespace

Term Term::variable(std::string name) {
  Term t;
  t.kind = TermKind::variable;
  t.written = "?" + name;
  t.value = std::move(name);
  return t;
}

Term Term::iri(std::string expanded, std::string written) {
  Term t;
  t.kind = TermKind::iri;
  t.written = written.empty() ? "<" + expanded + ">" : std::move(written);
  t.value = std::move(expanded);
  return t;
}

Term Term::literal(std::string lexical, std::optional<std::string> datatype,
                   std::optional<std::string> language, std::string written) {
  Term t;
  t.kind = TermKind::literal;
  t.value = std::move(lexical);
  t.datatype = std::move(datatype);
  t.language = std::move(language);
  if (written.empty()) {
    written = "\"" + escapeLiteral(t.value) + "\"";
    if (t.language) {
      written += "@" + *t.language;
    } else if (t.datatype) {
      written += "^^<" + *t.datatype + ">";
    }
  }
  t.written = std::move(written);
  return t;
}

std::string Term::key() const {
  switch (kind) {
    case TermKind::variable:
      return "?" + value;
    case TermKind::iri:
      return "<" + value + ">";
    case TermKind::literal: {
      std::string k = "\"" + escapeLiteral(value) + "\"";
      if (language) {
        k += "@" + *language;
      } else if (datatype) {
        k += "^^<" + *datatype + ">";
      }
      return k;
    }
  }
  return value;
}

std::vector<std::string> ParsedQuery::projectedVariables() const {
  std::vector<std::string> vars;
  vars.reserve(projection.size());
  for (const auto& p : projection) vars.push_back(p.variable);
  return vars;
}

const std::map<std::string, std::string>& builtinPrefixes() {
  static const std::map<std::string, std::string> kPrefixes = {
      {"wd", "http://www.wikidata.org/entity/"},
      {"wdt", "http://www.wikidata.org/prop/direct/"},
      {"p", "http://www.wikidata.org/prop/"},
      {"ps", "http://www.wikidata.org/prop/statement/"},
      {"pq", "http://www.wikidata.org/prop/qualifier/"},
      {"rdfs", "http://www.w3.org/2000/01/rdf-schema#"},
      {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
      {"xsd", "http://www.w3.org/2001/XMLSchema#"},
      {"schema", "http://schema.org/"},
      {"wikibase", "http://wikiba.se/ontology#"},
      {"bd", "http://www.bigdata.com/rdf#"},
  };
  return kPrefixes;
}

ParsedQuery parseSelect(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw ValidationError("query text is empty");
  }
  return Parser(text).run();
}

std::string serialize(const ParsedQuery& query) {
  std::string out;
  for (const auto& c : query.comments) out += "#" + c.text + "\n";
  if (query.base) out += "BASE <" + *query.base + ">\n";
  for (const auto& [prefix, iri] : query.prefixes) out += "PREFIX " + prefix + ": <" + iri + ">\n";
  out += "SELECT ";
  if (query.modifiers.distinct) out += "DISTINCT ";
  if (query.modifiers.reduced) out += "REDUCED ";
  if (query.selectAll) {
    out += "*";
  } else {
    for (std::size_t i = 0; i < query.projection.size(); ++i) {
      const auto& item = query.projection[i];
      if (i > 0) out += " ";
      if (item.expression) {
        out += "(" + *item.expression + " AS ?" + item.variable + ")";
      } else {
        out += "?" + item.variable;
      }
    }
  }
  out += "\n";
  for (const auto& c : query.unsupportedClauses) {
    if (c.kind == "FROM") out += c.text + "\n";
  }
  out += "WHERE {\n";
  for (const auto& t : query.triples) {
    out += "  " + t.subject.written + " " + t.predicate.written + " " + t.object.written + " .\n";
  }
  for (const auto& c : query.unsupportedClauses) {
    if (c.kind == "FROM") continue;
    out += "  " + c.text + (c.kind == "PATH" ? " .\n" : "\n");
  }
  out += "}\n";
  const auto& m = query.modifiers;
  if (m.groupBy) out += "GROUP BY " + *m.groupBy + "\n";
  if (m.having) out += "HAVING " + *m.having + "\n";
  if (m.orderBy) out += "ORDER BY " + *m.orderBy + "\n";
  if (m.limit) out += "LIMIT " + std::to_string(*m.limit) + "\n";
  if (m.offset) out += "OFFSET " + std::to_string(*m.offset) + "\n";
  return out;
}

}  // namespace kgqa::sparql
