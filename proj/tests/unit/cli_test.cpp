#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run cli(const std::string& args) {
  const std::string cmd = quote(KGQA_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (auto n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string config() { return quote((fs::path(KGQA_FIXTURES) / "config/stub-replay.json").string()); }

fs::path writeTemp(const std::string& name, const std::string& text) {
  auto path = fs::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, AskReplaysWimbledon) {
  auto r = cli("ask -c " + config() + " " + quote("Who won the men's singles at Wimbledon in 2019?"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Answer: Novak Djokovic"), std::string::npos) << r.out;
}

TEST(Cli, AskWarnsOnEmptyResults) {
  auto r = cli("ask -c " + config() + " " + quote("Which films did Fergie direct?"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("WARNING: the query returned empty results"), std::string::npos) << r.out;
}

TEST(Cli, AskReplayMissIsReported) {
  auto r = cli("ask -c " + config() + " " + quote("a question nobody recorded"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
  auto bad = writeTemp("kgqa-cli-bad.json", R"({"kgBackend": "stub", "mystery": 1})");
  EXPECT_EQ(cli("ask -c " + quote(bad.string()) + " q").code, 2);
  EXPECT_EQ(cli("ask -c /nonexistent/kgqa.json q").code, 2);
  EXPECT_EQ(cli("ask").code, 2);
}

TEST(Cli, GraphPrintsStructure) {
  auto file = writeTemp("kgqa-cli-director.rq",
                        "SELECT ?film ?director WHERE {\n  ?film wdt:P166 wd:Q102427 .\n  ?film wdt:P57 ?director .\n}\n");
  auto r = cli("graph " + quote(file.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["nodes"].size(), 3u);
  EXPECT_EQ(j["edges"].size(), 2u);
  EXPECT_EQ(j["nodes"][1]["label"], "wd:Q102427");

  auto labelled = cli("graph -c " + config() + " --labels " + quote(file.string()));
  ASSERT_EQ(labelled.code, 0) << labelled.out;
  j = nlohmann::json::parse(labelled.out);
  EXPECT_EQ(j["nodes"][1]["label"], "Academy Award for Best Picture");
  EXPECT_EQ(j["edges"][1]["label"], "director");

  auto ask = writeTemp("kgqa-cli-ask.rq", "ASK { ?x ?y ?z }");
  EXPECT_NE(cli("graph " + quote(ask.string())).code, 0);
}

TEST(Cli, EvalScoresSampleBank) {
  const auto out = fs::temp_directory_path() / "kgqa-cli-eval";
  fs::remove_all(out);
  auto r = cli("eval -c " + config() + " " + quote((fs::path(KGQA_DATA) / "sample_bank.jsonl").string()) +
               " --answerer both --cassettes " + quote((fs::path(KGQA_FIXTURES) / "eval").string()) + " --out " +
               quote(out.string()));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("100.0% (5/5)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("40.0% (2/5)"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "records.jsonl"));
  auto report = nlohmann::json::parse(std::ifstream(out / "report.json"));
  ASSERT_TRUE(report.is_array());
  EXPECT_EQ(report.size(), 2u);
}
