#include "kgqa/error.hpp"

namespace kgqa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::transport: return "transport";
    case ErrorKind::auth: return "auth";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::query: return "query";
    case ErrorKind::cassette: return "cassette";
    case ErrorKind::parse: return "parse";
    case ErrorKind::unsupported_form: return "unsupported_form";
    case ErrorKind::empty_graph: return "empty_graph";
    case ErrorKind::join: return "join";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::action_parse: return "action_parse";
    case ErrorKind::generation: return "generation";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::load: return "load";
    case ErrorKind::report: return "report";
  }
  return "unknown";
}

ErrorKind errorKindFromString(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(ErrorKind::report); ++i) {
    const auto kind = static_cast<ErrorKind>(i);
    if (to_string(kind) == text) return kind;
  }
  throw ValidationError("unknown error kind '" + std::string(text) + "'");
}

}  // namespace kgqa
