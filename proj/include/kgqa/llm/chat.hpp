#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/kg/transport.hpp"
#include "kgqa/kg/types.hpp"
#include "kgqa/llm/cassette.hpp"

namespace kgqa::llm {

enum class Role { system, user, assistant };
/// Who authored the text. Only `llm` text carries a hallucination warning.
enum class Origin { human, llm, system_injected };

std::string_view to_string(Role role);
std::string_view to_string(Origin origin);
Role roleFromString(std::string_view text);
Origin originFromString(std::string_view text);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  Origin origin = Origin::human;

  bool llmGenerated() const noexcept { return origin == Origin::llm; }

  static ChatMessage system(std::string content) {
    return {Role::system, std::move(content), Origin::system_injected};
  }
  static ChatMessage user(std::string content) {
    return {Role::user, std::move(content), Origin::human};
  }

  bool operator==(const ChatMessage&) const = default;
};

struct LlmConfig {
  std::string baseUrl = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int maxTokens = 1024;
  /// Name of the environment variable holding the API key.
  std::string apiKeyEnv = "OPENAI_API_KEY";

  /// Throws ConfigError on an empty model, a non-http(s) base URL, a
  /// temperature outside [0, 2] or a non-positive token budget.
  void validate() const;
};

/// Stable digest of the parts of a request that determine the reply: the
/// model and each message's role and content.
std::string requestDigest(std::string_view model, std::span<const ChatMessage> messages);

/// Client for OpenAI-compatible `POST {baseUrl}/chat/completions` endpoints.
class ChatGateway {
 public:
  ChatGateway(LlmConfig config, std::shared_ptr<kg::HttpTransport> transport);

  /// Requires a non-empty history starting with a system message. In replay
  /// mode the transport is never touched; a digest mismatch throws
  /// CassetteError. 401/403 map to AuthError, other failures to
  /// TransportError.
  ChatMessage complete(std::span<const ChatMessage> messages, Cassette& cassette) const;

  const LlmConfig& config() const noexcept { return config_; }

 private:
  std::string callEndpoint(std::span<const ChatMessage> messages) const;

  LlmConfig config_;
  std::shared_ptr<kg::HttpTransport> transport_;
};

/// Extracts choices[0].message.content from a chat-completions body.
std::string replyContent(std::string_view responseBody);

/// Builds a minimal chat-completions response body around `content`.
std::string makeCompletionBody(std::string_view model, std::string_view content);

/// Initial system message: the schema description, the protocol rules and the
/// instruction to clarify ambiguous questions before querying.
ChatMessage assembleSystemPrompt(const kg::SchemaSummary& schema, std::string_view protocolRules);

/// Formats the assistant side of a few-shot pair.
using FewShotFormatter = std::string (*)(const kg::FewShotExample&);
std::string fencedSparql(const kg::FewShotExample& example);

/// One user/assistant pair per example. Throws ValidationError when empty.
std::vector<ChatMessage> assembleFewShot(std::span<const kg::FewShotExample> examples,
                                         FewShotFormatter formatAnswer = &fencedSparql);

}  // namespace kgqa::llm
