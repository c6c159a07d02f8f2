#include <gtest/gtest.h>

#include <filesystem>

#include "kgqa/codec.hpp"
#include "kgqa/error.hpp"
#include "kgqa/kg/stub_backend.hpp"
#include "kgqa/llm/scripted.hpp"
#include "kgqa/protocol/engine.hpp"

using namespace kgqa;
using namespace kgqa::protocol;
namespace fs = std::filesystem;

namespace {

const std::string kQuestion = "Who won the men's singles at Wimbledon in 2019?";

std::shared_ptr<const kg::KgBackend> stubKg() {
  static auto kg = std::make_shared<const kg::StubBackend>(
      kg::StubBackend::loadFile(fs::path(KGQA_FIXTURES) / "stub/kg.json"));
  return kg;
}

std::string say(const Action& a) { return formatAction(a); }

const std::string kWinnerQuery =
    "SELECT ?w ?wLabel WHERE {\n  wd:Q900000401 wdt:P1346 ?w .\n  ?w rdfs:label ?wLabel .\n}";

/// Engine over the stub KG answering from a fixed list of LLM replies.
struct Rig {
  explicit Rig(std::vector<std::string> replies, Budgets budgets = {})
      : script(std::make_unique<llm::ScriptedLlm>(
            std::map<std::string, std::vector<std::string>>{{"*", std::move(replies)}})),
        engine(stubKg(), llm::ChatGateway(llm::LlmConfig{}, script->transport()), budgets) {}

  Session start() { return engine.startSession(kQuestion); }

  std::unique_ptr<llm::ScriptedLlm> script;
  ProtocolEngine engine;
  llm::Cassette cassette = llm::Cassette::live();
};

std::size_t count(const Session& s, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : s.events) n += e.kind == kind;
  return n;
}

const StateEvent& last(const Session& s) { return s.events.back(); }

Action sampleOf(ActionKind kind) {
  switch (kind) {
    case ActionKind::clarify: return Clarify{"Which year?"};
    case ActionKind::wellformed: return WellFormed{};
    case ActionKind::search: return Search{"Wimbledon"};
    case ActionKind::properties: return Properties{kg::EntityId("Q900000401")};
    case ActionKind::traverse: return Traverse{kg::EntityId("Q900000401"), kg::RelationId("P1346")};
    case ActionKind::build_query: return BuildQuery{kWinnerQuery, "Finds the winner."};
    case ActionKind::stop: return Stop{"done"};
  }
  return WellFormed{};
}

std::vector<std::string> wimbledonScript() {
  return {
      say(WellFormed{}),
      say(Search{"2019 Wimbledon Championships men's singles"}),
      say(Traverse{kg::EntityId("Q900000401"), kg::RelationId("P1346")}),
      say(Stop{"have the event and the winner relation"}),
      say(BuildQuery{kWinnerQuery, "The winner of the event."}),
      "Novak Djokovic won.\nAnswer: Novak Djokovic",
  };
}

}  // namespace

TEST(Engine, StartSessionInstallsPromptAndQuestion) {
  Rig rig({});
  auto s = rig.start();
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_EQ(s.history[0].role, llm::Role::system);
  EXPECT_EQ(s.history[1].content, kQuestion);
  EXPECT_EQ(s.stage.detail, Detail::awaitUser);
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_THROW(rig.engine.startSession("  "), ValidationError);
}

TEST(Engine, EveryStateActionPairFollowsTheTable) {
  for (auto from : kAllDetails) {
    if (!takesLlmTurn(from)) continue;
    for (auto kind : kAllActionKinds) {
      Rig rig({say(sampleOf(kind))});
      auto s = rig.start();
      s.stage = SubState{from};
      const auto before = s.events.size();
      rig.engine.step(s, rig.cassette);
      const auto expected = nextDetail(from, kind);
      const std::string where = std::string(to_string(from)) + " / " + std::string(to_string(kind));
      if (expected) {
        EXPECT_EQ(s.stage.detail, *expected) << where;
        EXPECT_EQ(count(s, EventKind::protocol_error), 0u) << where;
      } else {
        EXPECT_EQ(s.stage.detail, from) << where;
        ASSERT_EQ(s.events.size(), before + 1) << where;
        EXPECT_EQ(last(s).kind, EventKind::protocol_error) << where;
        EXPECT_EQ(s.lastError->kind, ErrorKind::protocol) << where;
        EXPECT_NE(s.history.back().content.find("Allowed actions now"), std::string::npos) << where;
      }
    }
  }
}

TEST(Engine, StatesWithoutLlmTurnsRefuseToStep) {
  Rig rig({});
  auto s = rig.start();
  for (auto d : {Detail::queryEmitted, Detail::executing, Detail::summarizing, Detail::done}) {
    s.stage = SubState{d};
    EXPECT_THROW(rig.engine.step(s, rig.cassette), ProtocolError);
    EXPECT_EQ(s.stage.detail, d);
  }
  s.stage = SubState{Detail::llmClarifies};
  s.awaitingUser = true;
  EXPECT_THROW(rig.engine.step(s, rig.cassette), ProtocolError);
}

TEST(Engine, FullRunFollowsTheProtocol) {
  Rig rig(wimbledonScript());
  auto s = rig.start();
  EXPECT_EQ(rig.engine.advance(s, rig.cassette), Pause::queryReady);
  ASSERT_TRUE(s.generatedQuery);
  EXPECT_EQ(s.generatedQuery->origin, llm::Origin::llm);
  EXPECT_EQ(s.kgCalls, 2);
  EXPECT_TRUE(s.hallucinatedIds.empty());
  EXPECT_EQ(count(s, EventKind::hallucination), 0u);
  ASSERT_EQ(s.entityTable.size(), 2u);
  EXPECT_EQ(s.entityTable[1].label, "winner");
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  EXPECT_EQ(s.stage.detail, Detail::done);
  ASSERT_TRUE(s.summary);
  EXPECT_NE(s.summary->find("Novak Djokovic"), std::string::npos);
  EXPECT_EQ(stageTrace(s.events), "RRKKKGGSSS");
  EXPECT_TRUE(traceMatchesProtocol(s.events));
  EXPECT_EQ(s.llmCalls, 6u);
  for (std::size_t i = 0; i < s.events.size(); ++i) EXPECT_EQ(s.events[i].index, i);
}

TEST(Engine, ReplayIsDeterministic) {
  auto run = [] {
    Rig rig(wimbledonScript());
    auto s = rig.start();
    rig.engine.advance(s, rig.cassette);
    rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
    return nlohmann::json(s).dump();
  };
  EXPECT_EQ(run(), run());
}

TEST(Engine, ClarificationWaitsForTheUser) {
  Rig rig({say(Clarify{"Which tournament?"}), say(WellFormed{})});
  auto s = rig.start();
  EXPECT_EQ(rig.engine.advance(s, rig.cassette), Pause::awaitingUser);
  EXPECT_TRUE(s.awaitingUser);
  EXPECT_EQ(s.stage.detail, Detail::llmClarifies);
  EXPECT_EQ(s.refinementTurns, 1);
  EXPECT_THROW(rig.engine.replyToClarification(s, " "), ValidationError);
  rig.engine.replyToClarification(s, "Wimbledon");
  EXPECT_FALSE(s.awaitingUser);
  EXPECT_EQ(s.history.back().origin, llm::Origin::human);
  rig.engine.step(s, rig.cassette);
  EXPECT_EQ(s.stage.detail, Detail::llmDeclaresWellFormed);
  EXPECT_THROW(rig.engine.replyToClarification(s, "again"), ProtocolError);
}

TEST(Engine, RefinementTurnCap) {
  std::vector<std::string> replies(6, say(Clarify{"More detail?"}));
  Rig rig(replies);
  auto s = rig.start();
  for (int i = 0; i < 5; ++i) {
    rig.engine.step(s, rig.cassette);
    ASSERT_EQ(s.stage.detail, Detail::llmClarifies);
    rig.engine.replyToClarification(s, "detail " + std::to_string(i));
  }
  rig.engine.step(s, rig.cassette);
  EXPECT_EQ(s.stage.detail, Detail::llmDeclaresWellFormed);
  EXPECT_FALSE(s.awaitingUser);
  EXPECT_EQ(count(s, EventKind::warning), 1u);
  EXPECT_EQ(s.refinementTurns, 5);
}

TEST(Engine, KgCallBudget) {
  std::vector<std::string> replies = {say(WellFormed{})};
  for (int i = 0; i < 16; ++i) replies.push_back(say(Search{"Wimbledon"}));
  Rig rig(replies);
  auto s = rig.start();
  for (int i = 0; i < 16; ++i) rig.engine.step(s, rig.cassette);
  EXPECT_EQ(s.kgCalls, 15);
  EXPECT_EQ(s.stage.detail, Detail::fuzzySearchEntity);
  rig.engine.step(s, rig.cassette);
  EXPECT_EQ(s.kgCalls, 15);
  EXPECT_EQ(s.stage.detail, Detail::idsComplete);
  EXPECT_EQ(count(s, EventKind::budget), 1u);
}

TEST(Engine, UnreadableActionIsRepromptedOnce) {
  Rig ok({"I think it is clear.", say(WellFormed{})});
  auto s = ok.start();
  ok.engine.step(s, ok.cassette);
  EXPECT_EQ(s.stage.detail, Detail::llmDeclaresWellFormed);
  EXPECT_EQ(count(s, EventKind::reprompt), 1u);

  Rig bad({"no block", "still no block"});
  auto t = bad.start();
  bad.engine.step(t, bad.cassette);
  EXPECT_EQ(t.stage.detail, Detail::awaitUser);
  EXPECT_EQ(last(t).kind, EventKind::protocol_error);
  EXPECT_EQ(t.lastError->kind, ErrorKind::action_parse);
}

TEST(Engine, UnparseableQueryGetsOneRepair) {
  auto script = wimbledonScript();
  script.insert(script.begin() + 4, say(BuildQuery{"SELECT ?w WHERE { wd:Q900000401 wdt:P1346 ", "oops"}));
  Rig rig(script);
  auto s = rig.start();
  EXPECT_EQ(rig.engine.advance(s, rig.cassette), Pause::queryReady);
  EXPECT_EQ(count(s, EventKind::reprompt), 1u);

  auto broken = wimbledonScript();
  broken[4] = say(BuildQuery{"SELECT ?w WHERE {", "oops"});
  broken.insert(broken.begin() + 5, say(BuildQuery{"ASK { ?x ?y ?z }", "oops again"}));
  Rig rig2(broken);
  auto t = rig2.start();
  EXPECT_EQ(rig2.engine.advance(t, rig2.cassette), Pause::failed);
  EXPECT_EQ(t.lastError->kind, ErrorKind::generation);
  EXPECT_FALSE(t.generatedQuery);
}

TEST(Engine, HallucinatedIdsAreFlagged) {
  auto script = wimbledonScript();
  script[4] = say(BuildQuery{
      "SELECT ?f WHERE { ?f wdt:P57 wd:Q900000301 . ?f wdt:P1346 wd:Q999999999 . }", "Made up."});
  Rig rig(script);
  auto s = rig.start();
  EXPECT_EQ(rig.engine.advance(s, rig.cassette), Pause::queryReady);
  ASSERT_EQ(count(s, EventKind::hallucination), 2u);
  std::vector<std::string> notes;
  for (const auto& e : s.events) {
    if (e.kind == EventKind::hallucination) notes.push_back(e.note);
  }
  EXPECT_NE(notes[0].find("never returned"), std::string::npos);
  EXPECT_NE(notes[0].find("Q900000301"), std::string::npos);
  EXPECT_NE(notes[0].find("Q999999999"), std::string::npos);
  EXPECT_NE(notes[1].find("does not know: Q999999999"), std::string::npos);
  ASSERT_EQ(s.entityTable.size(), 4u);
  EXPECT_TRUE(s.entityTable[1].resolvable);
  EXPECT_FALSE(s.entityTable[3].resolvable);
  // P57 is listed in the schema prompt, so it counts as seen.
  EXPECT_EQ(s.hallucinatedIds, (std::vector<std::string>{"Q900000301", "Q999999999"}));
}

TEST(Engine, UnsupportedClausesRaiseANotice) {
  auto script = wimbledonScript();
  script[4] = say(BuildQuery{kWinnerQuery.substr(0, kWinnerQuery.size() - 1) + "  FILTER(?w != wd:Q5812)\n}",
                             "With a filter."});
  Rig rig(script);
  auto s = rig.start();
  rig.engine.advance(s, rig.cassette);
  EXPECT_EQ(count(s, EventKind::notice), 1u);
  EXPECT_NE(last(s).note.find("FILTER"), std::string::npos);
}

TEST(Engine, ExecutionNeedsAQuery) {
  Rig rig({});
  auto s = rig.start();
  EXPECT_THROW(rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{}), ProtocolError);
  EXPECT_EQ(s.events.size(), 1u);
}

TEST(Engine, EmptyResultsAreAnnounced) {
  Rig rig({"Nothing matched.\nAnswer: none"});
  auto s = rig.start();
  rig.engine.replaceQuery(s, "SELECT ?x WHERE { wd:Q102427 wdt:P999 ?x }");
  EXPECT_EQ(s.generatedQuery->origin, llm::Origin::human);
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  std::vector<EventKind> kinds;
  for (auto i = s.events.size() - 4; i < s.events.size(); ++i) kinds.push_back(s.events[i].kind);
  EXPECT_EQ(kinds, (std::vector<EventKind>{EventKind::transition, EventKind::empty_results,
                                           EventKind::transition, EventKind::transition}));
  EXPECT_EQ(s.stage.detail, Detail::done);
  EXPECT_TRUE(s.results->rows.empty());
}

TEST(Engine, SummaryPromptCapsRows) {
  Budgets b;
  b.summaryRowCap = 2;
  Rig rig({"Films.\nAnswer: several"}, b);
  auto s = rig.start();
  rig.engine.replaceQuery(s, "SELECT ?f WHERE { ?f wdt:P31 wd:Q11424 }");
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  const auto& prompt = s.history[s.history.size() - 2].content;
  EXPECT_NE(prompt.find("(first 2 shown)"), std::string::npos);
  EXPECT_NE(prompt.find("more rows not shown"), std::string::npos);
  EXPECT_NE(prompt.find("Parasite"), std::string::npos);
}

TEST(Engine, ActionDuringSummaryIsAProtocolError) {
  Rig rig({say(Search{"more"})});
  auto s = rig.start();
  rig.engine.replaceQuery(s, kWinnerQuery);
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  EXPECT_EQ(s.stage.detail, Detail::summarizing);
  EXPECT_EQ(last(s).kind, EventKind::protocol_error);
  EXPECT_FALSE(s.summary);
}

TEST(Engine, ExecutionFailureIsRecorded) {
  Rig rig({});
  auto s = rig.start();
  rig.engine.replaceQuery(s, "SELECT ?x WHERE { ?x wdt:P31 ?y . FILTER(?y != wd:Q5) }");
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  EXPECT_EQ(last(s).kind, EventKind::error);
  EXPECT_EQ(s.lastError->kind, ErrorKind::query);
  EXPECT_FALSE(s.results);
}

TEST(Engine, ReplaceQueryRejectsBadText) {
  Rig rig({});
  auto s = rig.start();
  EXPECT_THROW(rig.engine.replaceQuery(s, "SELECT ?x WHERE {"), ParseError);
  EXPECT_THROW(rig.engine.replaceQuery(s, "ASK { ?x ?y ?z }"), UnsupportedFormError);
  EXPECT_FALSE(s.generatedQuery);
}

TEST(Engine, LlmFailureIsAnEventNotACrash) {
  Rig rig({});
  auto s = rig.start();
  EXPECT_EQ(rig.engine.advance(s, rig.cassette), Pause::failed);
  EXPECT_EQ(last(s).kind, EventKind::error);
  EXPECT_EQ(s.lastError->kind, ErrorKind::transport);
}

TEST(Engine, Widgets) {
  Rig rig(wimbledonScript());
  auto s = rig.start();
  rig.engine.advance(s, rig.cassette);
  rig.engine.executeAndSummarize(s, rig.cassette, UserApproval{});
  const auto historySize = s.history.size();

  auto wrong = s;
  rig.engine.applyPromptWidget(wrong, PromptWidget::wrongData, "");
  EXPECT_EQ(wrong.stage.detail, Detail::fuzzySearchEntity);
  EXPECT_EQ(wrong.kgCalls, 0);
  EXPECT_FALSE(wrong.generatedQuery);
  EXPECT_FALSE(wrong.results);
  EXPECT_FALSE(wrong.summary);
  EXPECT_FALSE(wrong.discovered.empty());
  EXPECT_EQ(wrong.history[historySize].content, widgetTemplate(PromptWidget::wrongData));
  EXPECT_EQ(wrong.history[historySize].origin, llm::Origin::human);
  EXPECT_EQ(last(wrong).kind, EventKind::rewind);

  auto misunderstood = s;
  rig.engine.applyPromptWidget(misunderstood, PromptWidget::misunderstoodQuestion, "I meant women's singles.");
  EXPECT_EQ(misunderstood.stage.detail, Detail::awaitUser);
  EXPECT_EQ(misunderstood.refinementTurns, 0);
  EXPECT_EQ(misunderstood.history.back().content, "I meant women's singles.");
  EXPECT_EQ(misunderstood.question, kQuestion);

  auto fresh = s;
  rig.engine.applyPromptWidget(fresh, PromptWidget::newQuestion, "Who directed Parasite?");
  EXPECT_EQ(fresh.stage.detail, Detail::awaitUser);
  EXPECT_EQ(fresh.question, "Who directed Parasite?");
  EXPECT_TRUE(fresh.discovered.empty());
  EXPECT_EQ(fresh.kgCalls, 0);
  EXPECT_GT(fresh.history.size(), historySize);

  EXPECT_EQ(widgetFromString("newQuestion"), PromptWidget::newQuestion);
  EXPECT_THROW(widgetFromString("other"), ValidationError);
}

TEST(Engine, ObserverSeesEveryEvent) {
  Rig rig(wimbledonScript());
  std::size_t seen = 0;
  rig.engine.setObserver([&](const Session& s, const StateEvent& e) {
    EXPECT_EQ(&s.events.back(), &e);
    ++seen;
  });
  auto s = rig.start();
  rig.engine.advance(s, rig.cassette);
  EXPECT_EQ(seen, s.events.size());
}

TEST(Engine, NeedsABackend) {
  EXPECT_THROW(ProtocolEngine(nullptr, llm::ChatGateway(llm::LlmConfig{}, nullptr)), ConfigError);
}

TEST(Trace, Shapes) {
  auto ev = [](std::initializer_list<Detail> ds) {
    std::vector<StateEvent> out;
    for (auto d : ds) out.push_back(StateEvent{out.size(), 0, SubState{d}, EventKind::transition, "", {}});
    return out;
  };
  using D = Detail;
  EXPECT_TRUE(traceMatchesProtocol(ev({D::awaitUser, D::fuzzySearchEntity, D::fewShotPrompt, D::done})));
  EXPECT_TRUE(traceMatchesProtocol(ev({D::awaitUser, D::traverse, D::fewShotPrompt, D::traverse,
                                       D::fewShotPrompt, D::queryEmitted, D::executing})));
  EXPECT_FALSE(traceMatchesProtocol(ev({D::awaitUser, D::fewShotPrompt, D::done})));
  EXPECT_FALSE(traceMatchesProtocol(ev({D::fuzzySearchEntity, D::fewShotPrompt, D::done})));
  EXPECT_FALSE(traceMatchesProtocol(ev({D::awaitUser, D::traverse, D::fewShotPrompt})));
  EXPECT_FALSE(traceMatchesProtocol(ev({D::awaitUser, D::traverse, D::done, D::fewShotPrompt, D::done})));
  EXPECT_EQ(stageTrace(ev({D::awaitUser, D::idsComplete, D::queryEmitted, D::summarizing})), "RKGS");
}

TEST(SerializeResults, ShortensIdsAndAddsLabels) {
  kg::SparqlResultTable t;
  t.columns = {"w", "n"};
  t.rows.push_back({kg::IriCell{"http://www.wikidata.org/entity/Q5812"}, kg::LiteralCell{"1", {}, {}}});
  t.rows.push_back({kg::IriCell{"http://example.org/x"}, kg::UnboundCell{}});
  std::vector<kg::EntityRecord> labels = {{"Q5812", "Novak Djokovic", "", kg::RecordKind::entity, true}};
  EXPECT_EQ(serializeResults(t, 50, labels), "w\tn\nQ5812 (Novak Djokovic)\t1\nhttp://example.org/x\t\n");
  EXPECT_EQ(serializeResults(t, 1), "w\tn\nQ5812\t1\n(1 more rows not shown)\n");
}
