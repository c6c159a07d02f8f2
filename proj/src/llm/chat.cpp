#include "kgqa/llm/chat.hpp"

#include <cstdlib>

#include <json.hpp>

#include "kgqa/error.hpp"
#include "kgqa/util/digest.hpp"

namespace kgqa::llm {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::human: return "human";
    case Origin::llm: return "llm";
    case Origin::system_injected: return "system";
  }
  return "human";
}

Role roleFromString(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  throw ValidationError("unknown chat role '" + std::string(text) + "'");
}

Origin originFromString(std::string_view text) {
  if (text == "human") return Origin::human;
  if (text == "llm") return Origin::llm;
  if (text == "system") return Origin::system_injected;
  throw ValidationError("unknown message origin '" + std::string(text) + "'");
}

void LlmConfig::validate() const {
  if (model.empty()) throw ConfigError("llm.model must not be empty");
  if (!(baseUrl.starts_with("http://") || baseUrl.starts_with("https://")) ||
      baseUrl.find("://") + 3 >= baseUrl.size()) {
    throw ConfigError("llm.baseUrl must be an http(s) URL, got '" + baseUrl + "'");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("llm.temperature must lie in [0, 2]");
  }
  if (maxTokens <= 0) throw ConfigError("llm.maxTokens must be positive");
}

std::string requestDigest(std::string_view model, std::span<const ChatMessage> messages) {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const json canonical = {{"model", model}, {"messages", msgs}};
  return util::sha256Hex(canonical.dump());
}

std::string replyContent(std::string_view responseBody) {
  try {
    const auto doc = json::parse(responseBody);
    if (doc.contains("error")) {
      throw TransportError("LLM endpoint error: " + doc["error"].dump(), 200);
    }
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat-completions response: ") + e.what(), 200);
  }
}

std::string makeCompletionBody(std::string_view model, std::string_view content) {
  return json{{"object", "chat.completion"},
              {"model", model},
              {"choices",
               json::array({{{"index", 0},
                             {"message", {{"role", "assistant"}, {"content", content}}},
                             {"finish_reason", "stop"}}})}}
      .dump();
}

ChatGateway::ChatGateway(LlmConfig config, std::shared_ptr<kg::HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string ChatGateway::callEndpoint(std::span<const ChatMessage> messages) const {
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const json body = {{"model", config_.model},
                     {"messages", msgs},
                     {"temperature", config_.temperature},
                     {"max_tokens", config_.maxTokens}};
  kg::HttpRequest request;
  request.method = "POST";
  request.url = config_.baseUrl;
  while (request.url.ends_with("/")) request.url.pop_back();
  request.url += "/chat/completions";
  request.body = body.dump();
  request.contentType = "application/json";
  request.timeout = std::chrono::seconds(120);
  if (const char* key = std::getenv(config_.apiKeyEnv.c_str()); key && *key) {
    request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  const auto response = transport_->send(request);
  if (response.status == 401 || response.status == 403) {
    throw AuthError("LLM endpoint rejected the credentials in $" + config_.apiKeyEnv +
                        " (HTTP " + std::to_string(response.status) + ")",
                    response.status);
  }
  if (response.status != 200) {
    throw TransportError("LLM endpoint returned HTTP " + std::to_string(response.status) + ": " +
                             response.body.substr(0, 300),
                         response.status);
  }
  return response.body;
}

ChatMessage ChatGateway::complete(std::span<const ChatMessage> messages, Cassette& cassette) const {
  if (messages.empty()) throw ValidationError("chat history is empty");
  if (messages.front().role != Role::system) {
    throw ValidationError("chat history must start with a system message");
  }
  const auto digest = requestDigest(config_.model, messages);
  std::string body;
  switch (cassette.mode()) {
    case CassetteMode::replay:
      body = cassette.next(digest);
      break;
    case CassetteMode::record:
      body = callEndpoint(messages);
      cassette.append(digest, body);
      break;
    case CassetteMode::live:
      body = callEndpoint(messages);
      break;
  }
  return ChatMessage{Role::assistant, replyContent(body), Origin::llm};
}

}  // namespace kgqa::llm
