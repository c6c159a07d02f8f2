#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "kgqa/kg/backend.hpp"
#include "kgqa/kg/transport.hpp"
#include "kgqa/llm/cassette.hpp"
#include "kgqa/llm/chat.hpp"
#include "kgqa/protocol/engine.hpp"

namespace kgqa::app {

enum class BackendKind { wikidata, stub };

struct AppConfig {
  BackendKind kgBackend = BackendKind::stub;
  /// Stub knowledge graph file, required for the stub backend.
  std::filesystem::path stubPath;
  std::string kgEndpointUrl = "https://query.wikidata.org/sparql";
  std::string kgApiUrl = "https://www.wikidata.org/w/api.php";
  llm::LlmConfig llm;
  llm::CassetteMode cassetteMode = llm::CassetteMode::live;
  /// Root of recorded traffic: `wikidata/` HTTP fixtures and `cassettes/`.
  std::optional<std::filesystem::path> fixtureDir;
  std::filesystem::path sessionStoreDir = "sessions";
  std::string listenAddress = "127.0.0.1:8080";
  protocol::Budgets budgets;

  /// Throws ConfigError: replay or record without fixtureDir, a stub backend
  /// without stubPath, a malformed listen address, bad budgets or LLM
  /// settings.
  void validate() const;

  std::string listenHost() const;
  int listenPort() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// Reads the process environment.
std::optional<std::string> processEnv(const std::string& name);

/// Builds a config from a JSON object. Relative paths resolve against
/// `baseDir`. Unknown keys and an inline API key are rejected.
AppConfig configFromJson(const nlohmann::json& j, const std::filesystem::path& baseDir = {});

/// Overrides from KGQA_KG_BACKEND, KGQA_STUB_PATH, KGQA_KG_ENDPOINT,
/// KGQA_KG_API, KGQA_LLM_BASE_URL, KGQA_LLM_MODEL, KGQA_CASSETTE_MODE,
/// KGQA_FIXTURE_DIR, KGQA_SESSION_DIR and KGQA_LISTEN.
void applyEnvironment(AppConfig& config, const EnvLookup& env = processEnv);

/// File (optional) plus environment, validated. Throws ConfigError.
AppConfig loadConfig(const std::optional<std::filesystem::path>& path,
                     const EnvLookup& env = processEnv);

nlohmann::json configToJson(const AppConfig& config);

/// Wires backends, transports and cassettes for one configuration.
class Runtime {
 public:
  /// `llmTransport` replaces the HTTP client of the LLM gateway, e.g. to
  /// answer from a script while recording.
  explicit Runtime(AppConfig config, std::shared_ptr<kg::HttpTransport> llmTransport = nullptr);

  const AppConfig& config() const noexcept { return config_; }
  std::shared_ptr<const kg::KgBackend> kg() const { return kg_; }
  const llm::ChatGateway& gateway() const { return *gateway_; }
  const protocol::ProtocolEngine& engine() const { return *engine_; }
  protocol::ProtocolEngine& engine() { return *engine_; }

  /// `<fixtureDir>/cassettes/<first 16 hex of sha256(question)>.ndjson`
  std::filesystem::path cassettePath(std::string_view question) const;
  /// Cassette for a session's question. Replay starts at `position`; record
  /// appends when `resume` is set and truncates otherwise.
  llm::Cassette openCassette(std::string_view question, std::size_t position = 0,
                             bool resume = false) const;

 private:
  AppConfig config_;
  std::shared_ptr<const kg::KgBackend> kg_;
  std::unique_ptr<llm::ChatGateway> gateway_;
  std::unique_ptr<protocol::ProtocolEngine> engine_;
};

}  // namespace kgqa::app
