#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kgqa/sparql/query.hpp"

namespace kgqa::sparql::detail {

enum class TokenType {
  variable,    // ?x / $x, text holds the name
  iri_ref,     // <...>, text holds the IRI without brackets
  pname,       // prefix:local, text holds it verbatim
  string,      // text holds the decoded value
  lang_tag,    // @en, text without '@'
  number,
  name,        // bare word: keywords, function names, 'a', true/false
  punct,       // { } ( ) . ; , * / | ^ ^^ ! + - = != < > <= >= && || ? [ ]
  blank_node,  // _:label
  end,
};

struct Token {
  TokenType type = TokenType::end;
  std::string text;
  /// Exact source slice, used when re-emitting clause text.
  std::string source;
  int line = 1;
  int column = 1;
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Comment> comments;
};

/// Throws ParseError on unterminated strings/IRIs or stray characters.
LexResult tokenize(std::string_view text);

/// Joins token sources with single spaces, keeping language tags, `^^` and
/// closing punctuation attached.
std::string joinTokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

}  // namespace kgqa::sparql::detail
