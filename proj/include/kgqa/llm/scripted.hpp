#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kgqa/kg/transport.hpp"

namespace kgqa::llm {

/// Chat-completions endpoint that answers from a script instead of a model.
/// Replies are keyed by the conversation's first user message (the
/// question); the key "*" serves any conversation without its own entry.
/// Each conversation consumes its replies in order. Used to author
/// cassettes and in tests.
class ScriptedLlm {
 public:
  explicit ScriptedLlm(std::map<std::string, std::vector<std::string>> replies);

  /// A JSON array of replies (served to every question) or an object mapping
  /// question text to an array. Throws ConfigError.
  static std::map<std::string, std::vector<std::string>> readFile(
      const std::filesystem::path& path);

  /// A transport bound to this script. The script must outlive it.
  std::shared_ptr<kg::HttpTransport> transport();

  /// Replies not yet served, per key.
  std::map<std::string, std::size_t> remaining() const;

 private:
  kg::HttpResponse answer(const kg::HttpRequest& request);

  std::map<std::string, std::vector<std::string>> replies_;
  std::map<std::string, std::size_t> served_;
  mutable std::mutex mutex_;
};

}  // namespace kgqa::llm
