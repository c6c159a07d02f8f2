#include "kgqa/app/store.hpp"

#include <algorithm>
#include <fstream>

#include "kgqa/codec.hpp"

namespace kgqa::app {

using nlohmann::json;

json persistedSession(const protocol::Session& session) {
  return json{{"type", "state"}, {"schemaVersion", kSessionSchemaVersion}, {"session", session}};
}

protocol::Session sessionFromPersisted(const json& line) {
  if (line.value("type", "") != "state") throw ValidationError("not a session state record");
  if (line.value("schemaVersion", 0) != kSessionSchemaVersion) {
    throw ValidationError("unsupported session schema version " +
                          line.value("schemaVersion", json(nullptr)).dump());
  }
  return line.at("session").get<protocol::Session>();
}

bool isValidSessionId(std::string_view id) {
  return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::fileFor(const std::string& id) const {
  if (!isValidSessionId(id)) throw ValidationError("invalid session id '" + id + "'");
  return dir_ / (id + ".jsonl");
}

void SessionStore::save(const protocol::Session& session) {
  const auto line = persistedSession(session).dump() + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(fileFor(session.id), std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorKind::configuration, "cannot write session store " + dir_.string());
  out << line;
  out.flush();
}

std::optional<protocol::Session> SessionStore::load(const std::string& id) const {
  std::lock_guard lock(mutex_);
  std::ifstream in(fileFor(id), std::ios::binary);
  if (!in) return std::nullopt;
  std::optional<json> last;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      last = json::parse(line);
    } catch (const json::parse_error&) {
      // torn write; keep the previous complete line
    }
  }
  if (!last) return std::nullopt;
  return sessionFromPersisted(*last);
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".jsonl") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace kgqa::app
