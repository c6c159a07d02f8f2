#include "kgqa/app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>

#include "kgqa/kg/stub_backend.hpp"
#include "kgqa/kg/wikidata_backend.hpp"
#include "kgqa/util/digest.hpp"

namespace kgqa::app {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

BackendKind backendFromString(const std::string& text) {
  if (text == "wikidata") return BackendKind::wikidata;
  if (text == "stub") return BackendKind::stub;
  throw ConfigError("kgBackend must be \"wikidata\" or \"stub\", got \"" + text + "\"");
}

std::string_view to_string(BackendKind kind) {
  return kind == BackendKind::wikidata ? "wikidata" : "stub";
}

void rejectUnknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

}  // namespace

std::optional<std::string> processEnv(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
  return std::nullopt;
}

std::string AppConfig::listenHost() const {
  return listenAddress.substr(0, listenAddress.rfind(':'));
}

int AppConfig::listenPort() const {
  return std::stoi(listenAddress.substr(listenAddress.rfind(':') + 1));
}

void AppConfig::validate() const {
  static const std::regex kListen(R"(^[A-Za-z0-9.\-]+:[0-9]{1,5}$)");
  if (!std::regex_match(listenAddress, kListen) || listenPort() > 65535) {
    throw ConfigError("listenAddress must look like host:port, got \"" + listenAddress + "\"");
  }
  if (cassetteMode != llm::CassetteMode::live && !fixtureDir) {
    throw ConfigError(std::string(llm::to_string(cassetteMode)) + " mode requires fixtureDir");
  }
  if (kgBackend == BackendKind::stub && stubPath.empty()) {
    throw ConfigError("the stub backend requires stubPath");
  }
  if (kgBackend == BackendKind::wikidata &&
      (kgEndpointUrl.rfind("http", 0) != 0 || kgApiUrl.rfind("http", 0) != 0)) {
    throw ConfigError("kgEndpointUrl and kgApiUrl must be http(s) URLs");
  }
  if (sessionStoreDir.empty()) throw ConfigError("sessionStoreDir must not be empty");
  if (budgets.maxRefinementTurns < 0 || budgets.maxKgCalls < 1) {
    throw ConfigError("budgets must allow at least one KG call and no negative turn cap");
  }
  llm.validate();
}

AppConfig configFromJson(const json& j, const std::filesystem::path& baseDir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  rejectUnknown(j,
                {"kgBackend", "stubPath", "kgEndpointUrl", "kgApiUrl", "llm", "cassetteMode",
                 "fixtureDir", "sessionStoreDir", "listenAddress", "budgets"},
                "config");
  AppConfig c;
  try {
    if (j.contains("kgBackend")) c.kgBackend = backendFromString(j["kgBackend"].get<std::string>());
    if (j.contains("stubPath")) c.stubPath = resolve(baseDir, j["stubPath"].get<std::string>());
    if (j.contains("kgEndpointUrl")) c.kgEndpointUrl = j["kgEndpointUrl"].get<std::string>();
    if (j.contains("kgApiUrl")) c.kgApiUrl = j["kgApiUrl"].get<std::string>();
    if (j.contains("cassetteMode")) {
      c.cassetteMode = llm::cassetteModeFromString(j["cassetteMode"].get<std::string>());
    }
    if (j.contains("fixtureDir") && !j["fixtureDir"].is_null()) {
      c.fixtureDir = resolve(baseDir, j["fixtureDir"].get<std::string>());
    }
    if (j.contains("sessionStoreDir")) {
      c.sessionStoreDir = resolve(baseDir, j["sessionStoreDir"].get<std::string>());
    }
    if (j.contains("listenAddress")) c.listenAddress = j["listenAddress"].get<std::string>();
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      if (l.contains("apiKey")) {
        throw ConfigError("the API key may only come from the environment (llm.apiKeyEnv)");
      }
      rejectUnknown(l, {"baseUrl", "model", "temperature", "maxTokens", "apiKeyEnv"}, "llm");
      c.llm.baseUrl = l.value("baseUrl", c.llm.baseUrl);
      c.llm.model = l.value("model", c.llm.model);
      c.llm.temperature = l.value("temperature", c.llm.temperature);
      c.llm.maxTokens = l.value("maxTokens", c.llm.maxTokens);
      c.llm.apiKeyEnv = l.value("apiKeyEnv", c.llm.apiKeyEnv);
    }
    if (j.contains("budgets")) {
      const auto& b = j["budgets"];
      rejectUnknown(b, {"maxQRturns", "maxKGcalls"}, "budgets");
      c.budgets.maxRefinementTurns = b.value("maxQRturns", c.budgets.maxRefinementTurns);
      c.budgets.maxKgCalls = b.value("maxKGcalls", c.budgets.maxKgCalls);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

void applyEnvironment(AppConfig& c, const EnvLookup& env) {
  if (auto v = env("KGQA_KG_BACKEND")) c.kgBackend = backendFromString(*v);
  if (auto v = env("KGQA_STUB_PATH")) c.stubPath = *v;
  if (auto v = env("KGQA_KG_ENDPOINT")) c.kgEndpointUrl = *v;
  if (auto v = env("KGQA_KG_API")) c.kgApiUrl = *v;
  if (auto v = env("KGQA_LLM_BASE_URL")) c.llm.baseUrl = *v;
  if (auto v = env("KGQA_LLM_MODEL")) c.llm.model = *v;
  if (auto v = env("KGQA_CASSETTE_MODE")) c.cassetteMode = llm::cassetteModeFromString(*v);
  if (auto v = env("KGQA_FIXTURE_DIR")) c.fixtureDir = *v;
  if (auto v = env("KGQA_SESSION_DIR")) c.sessionStoreDir = *v;
  if (auto v = env("KGQA_LISTEN")) c.listenAddress = *v;
}

AppConfig loadConfig(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
  AppConfig config;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + path->string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
    config = configFromJson(j, path->parent_path());
  }
  applyEnvironment(config, env);
  config.validate();
  return config;
}

json configToJson(const AppConfig& c) {
  return json{{"kgBackend", to_string(c.kgBackend)},
              {"stubPath", c.stubPath.string()},
              {"kgEndpointUrl", c.kgEndpointUrl},
              {"kgApiUrl", c.kgApiUrl},
              {"llm",
               {{"baseUrl", c.llm.baseUrl},
                {"model", c.llm.model},
                {"temperature", c.llm.temperature},
                {"maxTokens", c.llm.maxTokens},
                {"apiKeyEnv", c.llm.apiKeyEnv}}},
              {"cassetteMode", llm::to_string(c.cassetteMode)},
              {"fixtureDir", c.fixtureDir ? json(c.fixtureDir->string()) : json(nullptr)},
              {"sessionStoreDir", c.sessionStoreDir.string()},
              {"listenAddress", c.listenAddress},
              {"budgets",
               {{"maxQRturns", c.budgets.maxRefinementTurns},
                {"maxKGcalls", c.budgets.maxKgCalls}}}};
}

Runtime::Runtime(AppConfig config, std::shared_ptr<kg::HttpTransport> llmTransport)
    : config_(std::move(config)) {
  config_.validate();
  if (config_.kgBackend == BackendKind::stub) {
    kg_ = std::make_shared<kg::StubBackend>(kg::StubBackend::loadFile(config_.stubPath));
  } else {
    std::shared_ptr<kg::HttpTransport> transport;
    const auto live = [] {
      return std::make_shared<kg::PoliteTransport>(std::make_shared<kg::LiveTransport>());
    };
    switch (config_.cassetteMode) {
      case llm::CassetteMode::replay:
        transport = std::make_shared<kg::ReplayTransport>(
            std::make_shared<kg::FixtureStore>(*config_.fixtureDir / "wikidata"));
        break;
      case llm::CassetteMode::record:
        transport = std::make_shared<kg::RecordingTransport>(
            live(), std::make_shared<kg::FixtureStore>(*config_.fixtureDir / "wikidata"));
        break;
      case llm::CassetteMode::live:
        transport = live();
        break;
    }
    kg::WikidataOptions options;
    options.apiUrl = config_.kgApiUrl;
    options.sparqlUrl = config_.kgEndpointUrl;
    kg_ = std::make_shared<kg::WikidataBackend>(transport, options);
  }
  if (!llmTransport) {
    if (config_.cassetteMode == llm::CassetteMode::replay) {
      llmTransport = std::make_shared<kg::NoNetworkTransport>();
    } else {
      llmTransport = std::make_shared<kg::LiveTransport>();
    }
  }
  gateway_ = std::make_unique<llm::ChatGateway>(config_.llm, std::move(llmTransport));
  engine_ = std::make_unique<protocol::ProtocolEngine>(kg_, *gateway_, config_.budgets);
}

std::filesystem::path Runtime::cassettePath(std::string_view question) const {
  const auto dir = config_.fixtureDir.value_or(config_.sessionStoreDir);
  return dir / "cassettes" / (util::sha256Hex(question).substr(0, 16) + ".ndjson");
}

llm::Cassette Runtime::openCassette(std::string_view question, std::size_t position,
                                    bool resume) const {
  switch (config_.cassetteMode) {
    case llm::CassetteMode::replay: {
      auto c = llm::Cassette::openReplay(cassettePath(question));
      c.seek(position);
      return c;
    }
    case llm::CassetteMode::record:
      return resume ? llm::Cassette::openAppend(cassettePath(question))
                    : llm::Cassette::openRecord(cassettePath(question));
    case llm::CassetteMode::live:
      break;
  }
  return llm::Cassette::live();
}

}  // namespace kgqa::app
