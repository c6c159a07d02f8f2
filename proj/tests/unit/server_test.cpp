#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>

#include "kgqa/app/store.hpp"
#include "kgqa/codec.hpp"
#include "support/service.hpp"

using namespace kgqa;
using namespace kgqa::testsupport;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path freshStore(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::string create(LiveService& svc, const std::string& question) {
  auto r = svc.client.Post("/api/sessions", json{{"question", question}}.dump(), "application/json");
  EXPECT_TRUE(r);
  EXPECT_EQ(r->status, 201) << r->body;
  return bodyOf(r)["sessionId"];
}

json snapshot(LiveService& svc, const std::string& id) {
  auto r = svc.client.Get("/api/sessions/" + id);
  EXPECT_EQ(r->status, 200);
  auto j = bodyOf(r);
  j["flags"].erase("busy");
  return j;
}

}  // namespace

TEST(Server, HealthAndErrors) {
  LiveService svc(replayConfig(freshStore("kgqa-server-health")));
  auto health = svc.client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(bodyOf(health)["status"], "ok");
  EXPECT_EQ(bodyOf(health)["cassetteMode"], "replay");
  EXPECT_EQ(svc.client.Get("/api/sessions/nope")->status, 404);
  EXPECT_EQ(svc.client.Post("/api/sessions", "{bad", "application/json")->status, 400);
  EXPECT_EQ(svc.client.Post("/api/sessions", R"({"q":1})", "application/json")->status, 400);
  // No recorded conversation for this question in replay mode.
  auto miss = svc.client.Post("/api/sessions", R"({"question":"unrecorded question"})", "application/json");
  EXPECT_EQ(miss->status, 422);
  EXPECT_EQ(bodyOf(miss)["error"], "cassette");
}

TEST(Server, WimbledonSessionEndToEnd) {
  LiveService svc(replayConfig(freshStore("kgqa-server-wimbledon")));
  const auto id = create(svc, kWimbledon);
  svc.server.waitIdle();
  auto snap = snapshot(svc, id);
  EXPECT_EQ(snap["stage"]["detail"], "queryEmitted");
  EXPECT_TRUE(snap["flags"]["hasQuery"]);
  EXPECT_FALSE(snap["queryGraph"].is_null());
  EXPECT_EQ(svc.client.Post("/api/sessions/" + id + "/message", R"({"text":"hello"})", "application/json")->status,
            409);
  auto exec = svc.client.Post("/api/sessions/" + id + "/execute", "", "application/json");
  EXPECT_EQ(exec->status, 202);
  svc.server.waitIdle();
  snap = snapshot(svc, id);
  EXPECT_TRUE(snap["flags"]["done"]);
  EXPECT_NE(snap["summary"].get<std::string>().find("Novak Djokovic"), std::string::npos);
  ASSERT_FALSE(snap["resultsGraph"].is_null());
  EXPECT_GE(snap["resultsGraph"]["rowCount"], 1);
  EXPECT_EQ(snap["stageTrace"], "RRKKKGGSSS");

  auto events = svc.client.Get("/api/sessions/" + id + "/events?from=0&follow=0");
  ASSERT_TRUE(events);
  EXPECT_EQ(events->get_header_value("Content-Type"), "application/x-ndjson");
  auto lines = ndjsonLines(events->body);
  ASSERT_EQ(lines.size(), snap["events"].size());
  for (std::size_t i = 0; i < lines.size(); ++i) EXPECT_EQ(lines[i]["index"], i);
  auto tail = ndjsonLines(svc.client.Get("/api/sessions/" + id + "/events?from=3&follow=0")->body);
  EXPECT_EQ(tail.size(), lines.size() - 3);

  auto list = bodyOf(svc.client.Get("/api/sessions"));
  EXPECT_EQ(list["sessions"], json::array({id}));
}

TEST(Server, ClarifyReplyExecuteAndRefusals) {
  LiveService svc(replayConfig(freshStore("kgqa-server-directors")));
  const auto id = create(svc, kDirectors);
  svc.server.waitIdle();
  auto snap = snapshot(svc, id);
  EXPECT_TRUE(snap["flags"]["awaitingUser"]);
  EXPECT_FALSE(snap["flags"]["hasQuery"]);
  auto refused = svc.client.Post("/api/sessions/" + id + "/execute", "", "application/json");
  EXPECT_EQ(refused->status, 409);
  EXPECT_EQ(bodyOf(refused)["error"], "protocol");
  EXPECT_EQ(svc.client.Post("/api/sessions/" + id + "/message", R"({"text":"  "})", "application/json")->status, 400);
  EXPECT_EQ(svc.client.Post("/api/sessions/" + id + "/message", R"({"other":1})", "application/json")->status, 400);

  auto msg = svc.client.Post("/api/sessions/" + id + "/message", json{{"text", kDirectorsReply}}.dump(),
                             "application/json");
  EXPECT_EQ(msg->status, 202);
  svc.server.waitIdle();
  snap = snapshot(svc, id);
  EXPECT_EQ(snap["stage"]["detail"], "queryEmitted");
  ASSERT_EQ(snap["queryGraph"]["nodes"].size(), 5u);
  EXPECT_EQ(snap["queryGraph"]["nodes"][1]["label"], "Academy Award for Best Picture");
  EXPECT_EQ(snap["entityRelationTable"][1]["description"],
            "annual award from the Academy of Motion Picture Arts and Sciences");

  EXPECT_EQ(svc.client.Post("/api/sessions/" + id + "/execute", "", "application/json")->status, 202);
  svc.server.waitIdle();
  snap = snapshot(svc, id);
  EXPECT_TRUE(snap["flags"]["done"]);
  EXPECT_TRUE(protocol::traceMatchesProtocol(snap["events"].get<std::vector<protocol::StateEvent>>()));
}

TEST(Server, QueryEditsAndWidgets) {
  LiveService svc(replayConfig(freshStore("kgqa-server-edit")));
  const auto id = create(svc, kWimbledon);
  svc.server.waitIdle();
  auto bad = svc.client.Put("/api/sessions/" + id + "/query", R"({"sparql":"SELECT ?x WHERE {\n ?x"})",
                            "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(bodyOf(bad)["error"], "parse");
  EXPECT_TRUE(bodyOf(bad).contains("line"));
  auto ask = svc.client.Put("/api/sessions/" + id + "/query", R"({"sparql":"ASK { ?x ?y ?z }"})",
                            "application/json");
  EXPECT_EQ(ask->status, 400);
  EXPECT_EQ(bodyOf(ask)["error"], "unsupported_form");
  auto ok = svc.client.Put("/api/sessions/" + id + "/query",
                           R"({"sparql":"SELECT ?x WHERE { wd:Q102427 wdt:P999 ?x }"})", "application/json");
  ASSERT_EQ(ok->status, 200);
  EXPECT_EQ(bodyOf(ok)["query"]["origin"], "human");

  auto widget = svc.client.Post("/api/sessions/" + id + "/message",
                                R"({"widget":{"kind":"sideways","editedText":""}})", "application/json");
  EXPECT_EQ(widget->status, 400);
}

TEST(Server, RestartKeepsPersistedState) {
  const auto dir = freshStore("kgqa-server-restart");
  std::string id;
  json before;
  {
    LiveService svc(replayConfig(dir));
    id = create(svc, kWimbledon);
    svc.server.waitIdle();
    before = snapshot(svc, id);
  }
  app::SessionStore store(dir);
  auto persisted = store.load(id);
  ASSERT_TRUE(persisted);
  auto fromDisk = app::sessionSnapshot(*persisted);
  EXPECT_EQ(fromDisk, before);

  LiveService again(replayConfig(dir));
  auto after = snapshot(again, id);
  EXPECT_EQ(after, before);
  // The restored session continues from where its cassette stopped.
  EXPECT_EQ(again.client.Post("/api/sessions/" + id + "/execute", "", "application/json")->status, 202);
  again.server.waitIdle();
  EXPECT_TRUE(snapshot(again, id)["flags"]["done"]);
}

TEST(Server, StreamFollowsUntilDeadline) {
  LiveService svc(replayConfig(freshStore("kgqa-server-stream")));
  const auto id = create(svc, kWimbledon);
  const auto start = std::chrono::steady_clock::now();
  auto r = svc.client.Get("/api/sessions/" + id + "/events?from=0&wait=1500");
  ASSERT_TRUE(r);
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(1400));
  auto lines = ndjsonLines(r->body);
  EXPECT_GE(lines.size(), 3u);
}
