// kgqa command line: ask, serve, graph, eval, record.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kgqa/app/config.hpp"
#include "kgqa/app/server.hpp"
#include "kgqa/codec.hpp"
#include "kgqa/eval/harness.hpp"
#include "kgqa/llm/scripted.hpp"
#include "kgqa/sparql/graph.hpp"
#include "kgqa/sparql/query.hpp"

namespace {

using namespace kgqa;
using nlohmann::json;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kProtocol = 3, kTransport = 4 };

int exitFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration:
    case ErrorKind::load:
      return kConfig;
    case ErrorKind::protocol:
    case ErrorKind::action_parse:
    case ErrorKind::generation:
      return kProtocol;
    case ErrorKind::transport:
    case ErrorKind::auth:
    case ErrorKind::timeout:
    case ErrorKind::cassette:
    case ErrorKind::query:
      return kTransport;
    default:
      return kOther;
  }
}

std::string eventLine(const protocol::StateEvent& e) {
  std::ostringstream out;
  out << "[" << e.index << "] " << protocol::displayName(e.subState.stage()) << " -> "
      << protocol::displayName(e.subState.detail) << " | " << protocol::to_string(e.kind);
  if (!e.note.empty()) out << " | " << e.note;
  return out.str();
}

struct ConfigOptions {
  std::string configPath;
  std::string mode;
  std::string fixtureDir;

  app::AppConfig load() const {
    std::optional<std::filesystem::path> path;
    if (!configPath.empty()) path = configPath;
    auto config = app::loadConfig(path);
    if (!mode.empty()) config.cassetteMode = llm::cassetteModeFromString(mode);
    if (!fixtureDir.empty()) config.fixtureDir = fixtureDir;
    config.validate();
    return config;
  }
};

void addConfigOptions(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("-c,--config", o.configPath, "JSON config file");
  cmd->add_option("--mode", o.mode, "cassette mode: live, record or replay");
  cmd->add_option("--fixtures", o.fixtureDir, "fixture directory");
}

struct AskOptions {
  ConfigOptions config;
  std::string question;
  std::vector<std::string> replies;
  std::string script;
  std::string cassette;
  bool noExecute = false;
  bool json = false;
};

int runAsk(const AskOptions& o, bool recording) {
  auto config = o.config.load();
  if (recording) config.cassetteMode = llm::CassetteMode::record;
  std::optional<llm::ScriptedLlm> script;
  if (!o.script.empty()) script.emplace(llm::ScriptedLlm::readFile(o.script));
  config.validate();
  app::Runtime runtime(config, script ? script->transport() : nullptr);
  auto& engine = runtime.engine();
  engine.setObserver([](const protocol::Session&, const protocol::StateEvent& e) {
    std::cout << eventLine(e) << "\n" << std::flush;
  });

  auto cassette = o.cassette.empty()
                      ? runtime.openCassette(o.question)
                      : (config.cassetteMode == llm::CassetteMode::replay
                             ? llm::Cassette::openReplay(o.cassette)
                             : config.cassetteMode == llm::CassetteMode::record
                                   ? llm::Cassette::openRecord(o.cassette)
                                   : llm::Cassette::live());
  auto session = engine.startSession(o.question, "cli");
  std::size_t nextReply = 0;
  bool finished = false;
  for (int round = 0; round < 16 && !finished; ++round) {
    switch (engine.advance(session, cassette)) {
      case protocol::Pause::awaitingUser: {
        std::string asked = session.history.back().content;
        try {
          const auto turn = protocol::parseAction(asked);
          if (const auto* c = std::get_if<protocol::Clarify>(&turn.action)) asked = c->question;
        } catch (const ActionParseError&) {
        }
        std::cout << "LLM asks: " << asked << "\n";
        const std::string answer =
            nextReply < o.replies.size()
                ? o.replies[nextReply++]
                : "Please continue with your best interpretation of the question.";
        std::cout << "user replies: " << answer << "\n";
        engine.replyToClarification(session, answer);
        break;
      }
      case protocol::Pause::queryReady:
        std::cout << "\nGenerated query:\n" << session.generatedQuery->sparql << "\n";
        if (!session.generatedQuery->explanation.empty()) {
          std::cout << "\nExplanation (LLM-generated):\n"
                    << session.generatedQuery->explanation << "\n";
        }
        if (!session.entityTable.empty()) {
          std::cout << "\nEntity-relation table:\n";
          for (const auto& r : session.entityTable) {
            std::cout << "  " << r.id << "\t"
                      << (r.resolvable ? r.label : "(unknown to the knowledge graph)") << "\t"
                      << r.description << "\n";
          }
        }
        if (o.noExecute) {
          finished = true;
          break;
        }
        std::cout << "\n";
        engine.executeAndSummarize(session, cassette, protocol::UserApproval{});
        finished = true;
        break;
      case protocol::Pause::done:
      case protocol::Pause::failed:
        finished = true;
        break;
    }
  }
  engine.setObserver({});

  if (session.results) {
    std::vector<kg::EntityRecord> labels = session.discovered;
    labels.insert(labels.end(), session.entityTable.begin(), session.entityTable.end());
    std::cout << "\nResults (" << session.results->rows.size() << " rows):\n"
              << protocol::serializeResults(*session.results, 1000, labels);
    if (session.results->rows.empty()) {
      std::cout << "WARNING: the query returned empty results\n";
    }
  }
  if (session.summary) std::cout << "\nSummary (LLM-generated):\n" << *session.summary << "\n";
  if (o.json) std::cout << app::sessionSnapshot(session).dump(2) << "\n";

  if (session.lastError) {
    std::cerr << "error: " << session.lastError->message << "\n";
    return exitFor(session.lastError->kind);
  }
  const bool ok = session.stage.detail == protocol::Detail::done ||
                  (o.noExecute && session.generatedQuery);
  if (!ok) {
    std::cerr << "error: the protocol stopped in " << protocol::to_string(session.stage.detail)
              << "\n";
    return kProtocol;
  }
  return kOk;
}

std::unique_ptr<app::AppServer> gServer;

int runServe(const ConfigOptions& o, const std::string& listen) {
  auto config = o.load();
  if (!listen.empty()) config.listenAddress = listen;
  config.validate();
  app::Runtime runtime(config);
  gServer = std::make_unique<app::AppServer>(runtime);
  std::signal(SIGINT, [](int) { if (gServer) std::thread([] { gServer->stop(); }).detach(); });
  std::signal(SIGTERM, [](int) { if (gServer) std::thread([] { gServer->stop(); }).detach(); });
  std::cerr << "listening on " << config.listenAddress << "\n";
  gServer->run(config.listenHost(), config.listenPort());
  gServer->stop();
  gServer.reset();
  return kOk;
}

int runGraph(const std::string& file, bool labels, const ConfigOptions& o) {
  std::ifstream in(file);
  if (!in) {
    std::cerr << "error: cannot read " << file << "\n";
    return kOther;
  }
  std::stringstream text;
  text << in.rdbuf();
  const auto parsed = sparql::parseSelect(text.str());
  auto graph = sparql::buildQueryGraph(parsed);
  if (labels) {
    app::Runtime runtime(o.load());
    const auto ids = sparql::extractIds(parsed).ids;
    sparql::applyLabels(graph, sparql::buildEntityRelationTable(ids, *runtime.kg()));
  }
  std::cout << json(graph).dump(2) << "\n";
  return kOk;
}

struct EvalOptions {
  ConfigOptions config;
  std::string bank;
  std::string answerer = "protocol";
  std::string cassettes;
  std::string out;
  std::string records;
  std::string script;
  std::size_t parallel = 1;
};

int runEval(const EvalOptions& o) {
  const auto questions = eval::loadQuestions(o.bank);
  std::cout << "loaded " << questions.size() << " questions:";
  for (const auto& [c, n] : eval::categoryCounts(questions)) {
    std::cout << " " << eval::displayName(c) << "=" << n;
  }
  std::cout << "\n";

  std::vector<eval::AccuracyReport> reports;
  std::vector<eval::RunRecord> all;
  if (!o.records.empty()) {
    std::ifstream in(o.records);
    if (!in) throw ConfigError("cannot read run records " + o.records);
    std::map<std::string, std::vector<eval::RunRecord>> byAnswerer;
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto r = json::parse(line).get<eval::RunRecord>();
      byAnswerer[r.answererName].push_back(r);
    }
    for (auto& [name, records] : byAnswerer) {
      reports.push_back(eval::report(records, questions));
      all.insert(all.end(), records.begin(), records.end());
    }
  } else {
    auto config = o.config.load();
    std::optional<llm::ScriptedLlm> script;
    if (!o.script.empty()) script.emplace(llm::ScriptedLlm::readFile(o.script));
    app::Runtime runtime(config, script ? script->transport() : nullptr);
    std::vector<eval::Answerer> answerers;
    if (o.answerer == "both") {
      answerers = {eval::Answerer::protocol, eval::Answerer::directBaseline};
    } else {
      answerers = {eval::answererFromString(o.answerer)};
    }
    for (const auto a : answerers) {
      eval::BatchOptions batch;
      batch.answerer = a;
      batch.cassetteDir = o.cassettes.empty()
                              ? config.fixtureDir.value_or(".") / "eval"
                              : std::filesystem::path(o.cassettes);
      batch.mode = config.cassetteMode;
      batch.parallelism = o.parallel;
      batch.budgets = config.budgets;
      const auto records = eval::runBatch(questions, batch, runtime.kg(), runtime.gateway());
      for (const auto& r : records) {
        if (r.judged == eval::Judged::error) {
          std::cerr << "question " << r.questionId << " (" << r.answererName
                    << "): error: " << r.error << "\n";
        }
      }
      reports.push_back(eval::report(records, questions));
      all.insert(all.end(), records.begin(), records.end());
    }
  }

  std::cout << eval::formatTable(reports);
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream(std::filesystem::path(o.out) / "report.json")
        << eval::reportJson(reports).dump(2) << "\n";
    std::ofstream(std::filesystem::path(o.out) / "report.txt") << eval::formatTable(reports);
    if (o.records.empty()) {
      std::ofstream records(std::filesystem::path(o.out) / "records.jsonl");
      for (const auto& r : all) records << json(r).dump() << "\n";
    }
    std::cout << "wrote " << (std::filesystem::path(o.out) / "report.json").string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Human-in-the-loop question answering over knowledge graphs"};
  cli.require_subcommand(1);

  AskOptions ask;
  auto* askCmd = cli.add_subcommand("ask", "run one question headlessly and print the transcript");
  addConfigOptions(askCmd, ask.config);
  askCmd->add_option("question", ask.question, "the question")->required();
  askCmd->add_option("--reply", ask.replies, "answer to the LLM's next clarification request");
  askCmd->add_option("--script", ask.script, "answer LLM requests from a script file");
  askCmd->add_option("--cassette", ask.cassette, "cassette file (default: derived from the question)");
  askCmd->add_flag("--no-execute", ask.noExecute, "stop after the query is generated");
  askCmd->add_flag("--json", ask.json, "also print the final session snapshot");

  AskOptions record;
  auto* recordCmd =
      cli.add_subcommand("record", "run one question and record its LLM and KG traffic");
  addConfigOptions(recordCmd, record.config);
  recordCmd->add_option("question", record.question, "the question")->required();
  recordCmd->add_option("--reply", record.replies, "answer to the LLM's next clarification request");
  recordCmd->add_option("--script", record.script, "answer LLM requests from a script file");
  recordCmd->add_option("--cassette", record.cassette, "cassette file to write");
  recordCmd->add_flag("--no-execute", record.noExecute, "stop after the query is generated");

  ConfigOptions serve;
  std::string listen;
  auto* serveCmd = cli.add_subcommand("serve", "run the HTTP service");
  addConfigOptions(serveCmd, serve);
  serveCmd->add_option("--listen", listen, "host:port");

  ConfigOptions graphConfig;
  std::string graphFile;
  bool graphLabels = false;
  auto* graphCmd = cli.add_subcommand("graph", "print the structure graph of a SPARQL file as JSON");
  addConfigOptions(graphCmd, graphConfig);
  graphCmd->add_option("file", graphFile, "SPARQL SELECT query file")->required();
  graphCmd->add_flag("--labels", graphLabels, "fill labels from the configured knowledge graph");

  EvalOptions evalOpts;
  auto* evalCmd = cli.add_subcommand("eval", "score a question bank");
  addConfigOptions(evalCmd, evalOpts.config);
  evalCmd->add_option("bank", evalOpts.bank, "question bank (JSON lines)")->required();
  evalCmd->add_option("--answerer", evalOpts.answerer, "protocol, baseline or both");
  evalCmd->add_option("--cassettes", evalOpts.cassettes, "per-question cassette directory");
  evalCmd->add_option("--out", evalOpts.out, "directory for report.json, report.txt, records.jsonl");
  evalCmd->add_option("--records", evalOpts.records, "score existing run records instead of running");
  evalCmd->add_option("--script", evalOpts.script, "answer LLM requests from a script file");
  evalCmd->add_option("--parallel", evalOpts.parallel, "questions answered concurrently");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*askCmd) return runAsk(ask, false);
    if (*recordCmd) return runAsk(record, true);
    if (*serveCmd) return runServe(serve, listen);
    if (*graphCmd) return runGraph(graphFile, graphLabels, graphConfig);
    if (*evalCmd) return runEval(evalOpts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exitFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
