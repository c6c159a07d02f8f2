#include "kgqa/llm/scripted.hpp"

#include <fstream>

#include <json.hpp>

#include "kgqa/error.hpp"
#include "kgqa/llm/chat.hpp"

namespace kgqa::llm {

using nlohmann::json;

ScriptedLlm::ScriptedLlm(std::map<std::string, std::vector<std::string>> replies)
    : replies_(std::move(replies)) {}

std::map<std::string, std::vector<std::string>> ScriptedLlm::readFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read LLM script " + path.string());
  try {
    const auto j = json::parse(in);
    std::map<std::string, std::vector<std::string>> replies;
    if (j.is_array()) {
      replies["*"] = j.get<std::vector<std::string>>();
    } else {
      replies = j.get<std::map<std::string, std::vector<std::string>>>();
    }
    return replies;
  } catch (const json::exception& e) {
    throw ConfigError("LLM script " + path.string() + " must be an array of strings or an " +
                      "object of such arrays: " + e.what());
  }
}

std::shared_ptr<kg::HttpTransport> ScriptedLlm::transport() {
  return std::make_shared<kg::CallbackTransport>(
      [this](const kg::HttpRequest& request) { return answer(request); });
}

kg::HttpResponse ScriptedLlm::answer(const kg::HttpRequest& request) {
  const auto body = json::parse(request.body);
  std::string question;
  for (const auto& m : body.at("messages")) {
    if (m.at("role") == "user") {
      question = m.at("content").get<std::string>();
      break;
    }
  }
  std::lock_guard lock(mutex_);
  auto it = replies_.find(question);
  if (it == replies_.end()) it = replies_.find("*");
  if (it == replies_.end()) {
    throw TransportError("the LLM script has no replies for \"" + question + "\"", 0);
  }
  auto& served = served_[it->first];
  if (served >= it->second.size()) {
    throw TransportError("the LLM script ran out of replies for \"" + question + "\"", 0);
  }
  const auto& reply = it->second[served++];
  return {200, makeCompletionBody(body.value("model", "scripted"), reply)};
}

std::map<std::string, std::size_t> ScriptedLlm::remaining() const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::size_t> out;
  for (const auto& [key, replies] : replies_) {
    const auto it = served_.find(key);
    out[key] = replies.size() - (it == served_.end() ? 0 : it->second);
  }
  return out;
}

}  // namespace kgqa::llm
