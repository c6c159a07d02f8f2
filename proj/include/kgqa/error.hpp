#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgqa {

enum class ErrorKind {
  validation,
  transport,
  auth,
  timeout,
  query,
  cassette,
  parse,
  unsupported_form,
  empty_graph,
  join,
  protocol,
  action_parse,
  generation,
  configuration,
  load,
  report,
};

std::string_view to_string(ErrorKind kind);
ErrorKind errorKindFromString(std::string_view text);

/// Base of every error raised by the library. `kind()` lets callers map
/// failures onto exit codes or HTTP statuses without RTTI chains.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::validation, message) {}
};

/// Network or endpoint failure. `status()` is the HTTP status, or 0 when no
/// response was received.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, int status,
                 ErrorKind kind = ErrorKind::transport)
      : Error(kind, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class AuthError : public TransportError {
 public:
  AuthError(const std::string& message, int status)
      : TransportError(message, status, ErrorKind::auth) {}
};

class TimeoutError : public TransportError {
 public:
  explicit TimeoutError(const std::string& message)
      : TransportError(message, 0, ErrorKind::timeout) {}
};

/// The endpoint rejected a query (typically a syntax error).
class QueryError : public Error {
 public:
  explicit QueryError(const std::string& message)
      : Error(ErrorKind::query, message) {}
};

/// Replay lookup failed, or a cassette file is malformed.
class CassetteError : public Error {
 public:
  CassetteError(const std::string& message, std::string digest = {})
      : Error(ErrorKind::cassette, message), digest_(std::move(digest)) {}

  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error(ErrorKind::parse, message + " at line " + std::to_string(line) +
                                    ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class UnsupportedFormError : public Error {
 public:
  explicit UnsupportedFormError(const std::string& message)
      : Error(ErrorKind::unsupported_form, message) {}
};

class EmptyGraphError : public Error {
 public:
  explicit EmptyGraphError(const std::string& message)
      : Error(ErrorKind::empty_graph, message) {}
};

class JoinError : public Error {
 public:
  JoinError(const std::string& message, std::string variable)
      : Error(ErrorKind::join, message), variable_(std::move(variable)) {}

  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message)
      : Error(ErrorKind::protocol, message) {}
};

class ActionParseError : public Error {
 public:
  explicit ActionParseError(const std::string& message)
      : Error(ErrorKind::action_parse, message) {}
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& message)
      : Error(ErrorKind::generation, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::configuration, message) {}
};

class LoadError : public Error {
 public:
  LoadError(const std::string& message, std::size_t recordIndex)
      : Error(ErrorKind::load, message), recordIndex_(recordIndex) {}

  std::size_t recordIndex() const noexcept { return recordIndex_; }

 private:
  std::size_t recordIndex_;
};

class ReportError : public Error {
 public:
  explicit ReportError(const std::string& message)
      : Error(ErrorKind::report, message) {}
};

}  // namespace kgqa
