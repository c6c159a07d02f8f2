#include "lexer.hpp"

#include <cctype>

#include "kgqa/error.hpp"

namespace kgqa::sparql::detail {
namespace {

bool isNameStart(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool isNameChar(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c >= 0x80;
}
bool isIriChar(unsigned char c) {
  if (c <= 0x20) return false;
  switch (c) {
    case '<': case '>': case '"': case '{': case '}': case '|': case '^': case '`': case '\\':
      return false;
    default:
      return true;
  }
}

void appendUtf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  LexResult run() {
    LexResult result;
    while (true) {
      skipSpaceAndComments(result.comments);
      if (pos_ >= text_.size()) break;
      result.tokens.push_back(next());
    }
    Token end;
    end.type = TokenType::end;
    end.line = line_;
    end.column = column_;
    result.tokens.push_back(end);
    return result;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  [[noreturn]] void fail(const std::string& message, int line, int column) const {
    throw ParseError(message, line, column);
  }

  void skipSpaceAndComments(std::vector<Comment>& comments) {
    while (pos_ < text_.size()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#') {
        const int line = line_;
        advance();
        const auto start = pos_;
        while (pos_ < text_.size() && peek() != '\n') advance();
        auto body = std::string(text_.substr(start, pos_ - start));
        while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) {
          body.pop_back();
        }
        comments.push_back(Comment{line, body});
      } else {
        break;
      }
    }
  }

  Token make(TokenType type, std::string text, std::size_t start, int line, int column) {
    Token t;
    t.type = type;
    t.text = std::move(text);
    t.source = std::string(text_.substr(start, pos_ - start));
    t.line = line;
    t.column = column;
    return t;
  }

  Token next() {
    const auto start = pos_;
    const int line = line_;
    const int column = column_;
    const char c = peek();

    if ((c == '?' || c == '$') && (isNameStart(static_cast<unsigned char>(peek(1))) ||
                                   std::isdigit(static_cast<unsigned char>(peek(1))))) {
      advance();
      const auto nameStart = pos_;
      while (isNameChar(static_cast<unsigned char>(peek()))) advance();
      return make(TokenType::variable, std::string(text_.substr(nameStart, pos_ - nameStart)),
                  start, line, column);
    }

    if (c == '<') {
      std::size_t end = pos_ + 1;
      while (end < text_.size() && isIriChar(static_cast<unsigned char>(text_[end]))) ++end;
      if (end < text_.size() && text_[end] == '>') {
        const auto iri = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
        advance(end - pos_ + 1);
        return make(TokenType::iri_ref, iri, start, line, column);
      }
      if (peek(1) == '=') {
        advance(2);
        return make(TokenType::punct, "<=", start, line, column);
      }
      advance();
      return make(TokenType::punct, "<", start, line, column);
    }

    if (c == '"' || c == '\'') return lexString(c, start, line, column);

    if (c == '@') {
      advance();
      const auto tagStart = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-') advance();
      if (pos_ == tagStart) fail("empty language tag", line, column);
      return make(TokenType::lang_tag, std::string(text_.substr(tagStart, pos_ - tagStart)),
                  start, line, column);
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      if (peek() == 'e' || peek() == 'E') {
        std::size_t k = 1;
        if (peek(k) == '+' || peek(k) == '-') ++k;
        if (std::isdigit(static_cast<unsigned char>(peek(k)))) {
          advance(k);
          while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        }
      }
      auto text = std::string(text_.substr(start, pos_ - start));
      return make(TokenType::number, text, start, line, column);
    }

    if (c == '_' && peek(1) == ':') {
      advance(2);
      while (isNameChar(static_cast<unsigned char>(peek())) || peek() == '.') advance();
      while (text_[pos_ - 1] == '.') {
        --pos_;
        --column_;
      }
      return make(TokenType::blank_node, std::string(text_.substr(start + 2, pos_ - start - 2)),
                  start, line, column);
    }

    if (isNameStart(static_cast<unsigned char>(c)) || c == ':') {
      // Bare word, or a prefixed name when a ':' follows the prefix.
      while (isNameChar(static_cast<unsigned char>(peek())) || peek() == '.') {
        if (peek() == '.' && !isNameChar(static_cast<unsigned char>(peek(1)))) break;
        advance();
      }
      if (peek() == ':') {
        advance();
        while (isNameChar(static_cast<unsigned char>(peek())) || peek() == ':' || peek() == '%' ||
               (peek() == '.' && (isNameChar(static_cast<unsigned char>(peek(1))) ||
                                  peek(1) == ':'))) {
          advance();
        }
        auto text = std::string(text_.substr(start, pos_ - start));
        return make(TokenType::pname, text, start, line, column);
      }
      auto text = std::string(text_.substr(start, pos_ - start));
      return make(TokenType::name, text, start, line, column);
    }

    static constexpr std::string_view kTwoChar[] = {"^^", "!=", ">=", "&&", "||"};
    for (auto op : kTwoChar) {
      if (text_.substr(pos_, 2) == op) {
        advance(2);
        return make(TokenType::punct, std::string(op), start, line, column);
      }
    }
    static constexpr std::string_view kOneChar = "{}().;,*/|^!+-=>?[]";
    if (kOneChar.find(c) != std::string_view::npos) {
      advance();
      return make(TokenType::punct, std::string(1, c), start, line, column);
    }
    fail(std::string("unexpected character '") + c + "'", line, column);
  }

  Token lexString(char quote, std::size_t start, int line, int column) {
    const bool triple = peek(1) == quote && peek(2) == quote;
    advance(triple ? 3 : 1);
    std::string value;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string literal", line, column);
      const char c = peek();
      if (triple) {
        if (c == quote && peek(1) == quote && peek(2) == quote) {
          advance(3);
          break;
        }
      } else if (c == quote) {
        advance();
        break;
      } else if (c == '\n') {
        fail("newline in string literal", line_, column_);
      }
      if (c == '\\') {
        const char e = peek(1);
        switch (e) {
          case 't': value.push_back('\t'); break;
          case 'n': value.push_back('\n'); break;
          case 'r': value.push_back('\r'); break;
          case 'b': value.push_back('\b'); break;
          case 'f': value.push_back('\f'); break;
          case '"': value.push_back('"'); break;
          case '\'': value.push_back('\''); break;
          case '\\': value.push_back('\\'); break;
          case 'u':
          case 'U': {
            const std::size_t digits = e == 'u' ? 4 : 8;
            const auto hex = text_.substr(pos_ + 2, digits);
            if (hex.size() != digits) fail("truncated unicode escape", line_, column_);
            unsigned long cp = 0;
            for (char h : hex) {
              if (!std::isxdigit(static_cast<unsigned char>(h))) {
                fail("bad unicode escape", line_, column_);
              }
              cp = cp * 16 + static_cast<unsigned long>(
                                 std::isdigit(static_cast<unsigned char>(h))
                                     ? h - '0'
                                     : std::tolower(static_cast<unsigned char>(h)) - 'a' + 10);
            }
            appendUtf8(value, cp);
            advance(2 + digits);
            continue;
          }
          default:
            fail(std::string("bad escape '\\") + e + "'", line_, column_);
        }
        advance(2);
        continue;
      }
      value.push_back(c);
      advance();
    }
    return make(TokenType::string, value, start, line, column);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

}  // namespace

LexResult tokenize(std::string_view text) { return Lexer(text).run(); }

std::string joinTokens(const std::vector<Token>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = tokens[i];
    const bool glueLeft = t.type == TokenType::lang_tag ||
                          (t.type == TokenType::punct && (t.text == "^^" || t.text == ")" ||
                                                          t.text == "," || t.text == ";"));
    const bool prevGlues = i > begin && tokens[i - 1].type == TokenType::punct &&
                           (tokens[i - 1].text == "^^" || tokens[i - 1].text == "(");
    if (!out.empty() && !glueLeft && !prevGlues) out.push_back(' ');
    out += t.source;
  }
  return out;
}

}  // namespace kgqa::sparql::detail
