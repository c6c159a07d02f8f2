#pragma once

// Helpers for driving the HTTP service in-process against the stub replay
// fixtures.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kgqa/app/config.hpp"
#include "kgqa/app/server.hpp"

namespace kgqa::testsupport {

inline app::AppConfig replayConfig(const std::filesystem::path& storeDir) {
  auto config = app::loadConfig(std::filesystem::path(KGQA_FIXTURES) / "config/stub-replay.json",
                                [](const std::string&) { return std::nullopt; });
  config.sessionStoreDir = storeDir;
  config.listenAddress = "127.0.0.1:0";
  return config;
}

/// Runtime plus server bound to a free local port.
struct LiveService {
  explicit LiveService(const app::AppConfig& config)
      : runtime(config), server(runtime), port(server.start("127.0.0.1", 0)), client("127.0.0.1", port) {
    client.set_read_timeout(10, 0);
  }
  ~LiveService() { server.stop(); }

  app::Runtime runtime;
  app::AppServer server;
  int port;
  httplib::Client client;
};

inline nlohmann::json bodyOf(const httplib::Result& r) {
  if (!r || r->body.empty()) return nullptr;
  return nlohmann::json::parse(r->body, nullptr, false);
}

inline std::vector<nlohmann::json> ndjsonLines(const std::string& body) {
  std::vector<nlohmann::json> out;
  std::size_t start = 0;
  while (start < body.size()) {
    auto end = body.find('\n', start);
    if (end == std::string::npos) end = body.size();
    if (end > start) out.push_back(nlohmann::json::parse(body.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

inline const std::string kWimbledon = "Who won the men's singles at Wimbledon in 2019?";
inline const std::string kDirectors = "I want to know about award-winning films and their directors.";
inline const std::string kDirectorsReply =
    "The Academy Award for Best Picture. Which films won it and who directed them?";

}  // namespace kgqa::testsupport
