#include <string>

#include "kgqa/error.hpp"
#include "kgqa/llm/chat.hpp"

namespace kgqa::llm {

namespace {

std::string recordLine(const kg::EntityRecord& r) {
  std::string line = "- " + r.id + " (" + r.label + ")";
  if (!r.description.empty()) line += ": " + r.description;
  return line + "\n";
}

}  // namespace

ChatMessage assembleSystemPrompt(const kg::SchemaSummary& schema, std::string_view protocolRules) {
  if (protocolRules.empty()) throw ValidationError("protocol rules must not be empty");
  std::string text;
  text += "You help a user answer questions with data from the \"" + schema.backendName +
          "\" knowledge graph by writing SPARQL queries. You never answer from memory: the "
          "answer must come from running a query the user can inspect.\n\n";
  text += "## The knowledge graph\n" + schema.prose + "\n";
  if (!schema.exampleEntities.empty()) {
    text += "\nExample entities:\n";
    for (const auto& e : schema.exampleEntities) text += recordLine(e);
  }
  if (!schema.exampleRelations.empty()) {
    text += "\nExample relations:\n";
    for (const auto& r : schema.exampleRelations) text += recordLine(r);
  }
  text +=
      "\n## Clarifying the question\n"
      "If the user's question is ambiguous or open-ended, ask a clarifying question and "
      "suggest data from the knowledge graph that could answer it. Once the question is "
      "well-formed enough to be answered with a single query, say so and start exploring "
      "the knowledge graph.\n\n";
  text += "## Protocol\n";
  text += protocolRules;
  return ChatMessage::system(std::move(text));
}

std::string fencedSparql(const kg::FewShotExample& example) {
  return "```sparql\n" + example.sparql + "\n```";
}

std::vector<ChatMessage> assembleFewShot(std::span<const kg::FewShotExample> examples,
                                         FewShotFormatter formatAnswer) {
  if (examples.empty()) throw ValidationError("few-shot prompting needs at least one example");
  std::vector<ChatMessage> out;
  out.reserve(examples.size() * 2);
  for (const auto& ex : examples) {
    out.push_back({Role::user, ex.question, Origin::system_injected});
    out.push_back({Role::assistant, formatAnswer(ex), Origin::system_injected});
  }
  return out;
}

}  // namespace kgqa::llm
