#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgqa/protocol/session.hpp"

namespace kgqa::app {

inline constexpr int kSessionSchemaVersion = 1;

/// `{"type":"state","schemaVersion":1,"session":{…}}`
nlohmann::json persistedSession(const protocol::Session& session);
/// Throws ValidationError for another schema version or record type.
protocol::Session sessionFromPersisted(const nlohmann::json& line);

/// Append-only JSON-lines store, one file per session. Every save appends a
/// full state line; loading takes the last complete line, so a torn final
/// write loses at most that save.
class SessionStore {
 public:
  /// Creates `dir` when missing.
  explicit SessionStore(std::filesystem::path dir);

  void save(const protocol::Session& session);
  std::optional<protocol::Session> load(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::filesystem::path fileFor(const std::string& id) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/// Session ids double as file names: letters, digits, '-' and '_' only.
bool isValidSessionId(std::string_view id);

}  // namespace kgqa::app
