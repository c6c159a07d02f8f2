#include "kgqa/eval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace kgqa::eval {

using nlohmann::json;

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::optional<std::string> booleanToken(std::string_view normalized) {
  const auto word = normalized.substr(0, normalized.find(' '));
  if (word == "yes" || word == "true" || word == "y") return "yes";
  if (word == "no" || word == "false" || word == "n") return "no";
  return std::nullopt;
}

constexpr std::string_view kAutoReply =
    "Please continue with your best interpretation of the question.";

constexpr std::string_view kBaselinePrompt =
    "Answer the user's question about real-world facts as briefly as possible. Finish with one "
    "line of the form \"Answer: <answer>\".";

llm::Cassette openCassette(const BatchOptions& options, const QuestionRecord& q) {
  const auto path = options.cassetteDir / std::string(to_string(options.answerer)) /
                    (q.id + ".ndjson");
  switch (options.mode) {
    case llm::CassetteMode::replay:
      return llm::Cassette::openReplay(path);
    case llm::CassetteMode::record:
      std::filesystem::create_directories(path.parent_path());
      return llm::Cassette::openRecord(path);
    case llm::CassetteMode::live:
      break;
  }
  return llm::Cassette::live();
}

void answerWithProtocol(const QuestionRecord& q, const protocol::ProtocolEngine& engine,
                        llm::Cassette& cassette, RunRecord& record) {
  auto session = engine.startSession(q.text, q.id);
  auto fail = [&](const std::string& fallback) {
    record.judged = Judged::error;
    record.error = session.lastError ? session.lastError->message : fallback;
  };
  for (int round = 0; round < 16; ++round) {
    switch (engine.advance(session, cassette)) {
      case protocol::Pause::awaitingUser:
        engine.replyToClarification(session, std::string(kAutoReply));
        continue;
      case protocol::Pause::queryReady:
        record.producedQuery = session.generatedQuery->sparql;
        engine.executeAndSummarize(session, cassette, protocol::UserApproval{});
        if (!session.summary) return fail("no summary was produced");
        record.rawAnswer = extractAnswer(*session.summary);
        return;
      case protocol::Pause::done:
        record.rawAnswer = extractAnswer(session.summary.value_or(""));
        return;
      case protocol::Pause::failed:
        return fail("protocol stopped");
    }
  }
  fail("protocol did not finish");
}

void answerDirectly(const QuestionRecord& q, const llm::ChatGateway& gateway,
                    llm::Cassette& cassette, RunRecord& record) {
  const std::vector<llm::ChatMessage> messages = {
      llm::ChatMessage::system(std::string(kBaselinePrompt)), llm::ChatMessage::user(q.text)};
  record.rawAnswer = extractAnswer(gateway.complete(messages, cassette).content);
}

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Comparative: return "Comparative";
    case Category::YesNo: return "YesNo";
    case Category::Generic: return "Generic";
    case Category::MultiHop: return "MultiHop";
    case Category::Intersection: return "Intersection";
  }
  return "";
}

std::string_view displayName(Category category) {
  switch (category) {
    case Category::Comparative: return "Comparative";
    case Category::YesNo: return "Yes/No";
    case Category::Generic: return "Generic";
    case Category::MultiHop: return "Multi-Hop";
    case Category::Intersection: return "Intersection";
  }
  return "";
}

Category categoryFromString(std::string_view text) {
  std::string key;
  for (const char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  for (const auto category : kReportOrder) {
    if (key == lower(to_string(category))) return category;
  }
  throw ValidationError("unknown question category '" + std::string(text) + "'");
}

std::vector<QuestionRecord> parseQuestions(std::istream& in) {
  std::vector<QuestionRecord> out;
  std::string line;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto index = out.size();
    auto fail = [&](const std::string& why) -> LoadError {
      return LoadError("question record " + std::to_string(index) + ": " + why, index);
    };
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw fail("not a JSON object");
    for (const char* key : {"id", "category", "text"}) {
      if (!j.contains(key) || !j[key].is_string() || trim(j[key].get<std::string>()).empty()) {
        throw fail(std::string("missing or empty \"") + key + "\"");
      }
    }
    QuestionRecord q;
    q.id = j["id"].get<std::string>();
    q.text = j["text"].get<std::string>();
    try {
      q.category = categoryFromString(j["category"].get<std::string>());
    } catch (const ValidationError& e) {
      throw fail(e.what());
    }
    if (!j.contains("gold") || !j["gold"].is_array() || j["gold"].empty()) {
      throw fail("\"gold\" must be a non-empty list");
    }
    for (const auto& g : j["gold"]) {
      if (!g.is_string() || trim(g.get<std::string>()).empty()) {
        throw fail("gold answers must be non-empty strings");
      }
      q.gold.push_back(g.get<std::string>());
    }
    if (!ids.insert(q.id).second) throw fail("duplicate id '" + q.id + "'");
    out.push_back(std::move(q));
  }
  if (out.empty()) throw LoadError("question bank is empty", 0);
  return out;
}

std::vector<QuestionRecord> loadQuestions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open question bank " + path.string(), 0);
  return parseQuestions(in);
}

std::map<Category, std::size_t> categoryCounts(std::span<const QuestionRecord> questions) {
  std::map<Category, std::size_t> counts;
  for (const auto c : kReportOrder) counts[c] = 0;
  for (const auto& q : questions) ++counts[q.category];
  return counts;
}

std::string_view to_string(Judged judged) {
  switch (judged) {
    case Judged::correct: return "correct";
    case Judged::incorrect: return "incorrect";
    case Judged::error: return "error";
  }
  return "";
}

Judged judgedFromString(std::string_view text) {
  if (text == "correct") return Judged::correct;
  if (text == "incorrect") return Judged::incorrect;
  if (text == "error") return Judged::error;
  throw ValidationError("unknown verdict '" + std::string(text) + "'");
}

void to_json(json& j, const RunRecord& r) {
  j = json{{"questionId", r.questionId},
           {"answerer", r.answererName},
           {"producedQuery", r.producedQuery ? json(*r.producedQuery) : json(nullptr)},
           {"rawAnswer", r.rawAnswer},
           {"judged", to_string(r.judged)},
           {"latencyMs", r.latency.count()},
           {"error", r.error}};
}

void from_json(const json& j, RunRecord& r) {
  r.questionId = j.at("questionId").get<std::string>();
  r.answererName = j.at("answerer").get<std::string>();
  r.producedQuery.reset();
  if (j.contains("producedQuery") && !j["producedQuery"].is_null()) {
    r.producedQuery = j["producedQuery"].get<std::string>();
  }
  r.rawAnswer = j.value("rawAnswer", "");
  r.judged = judgedFromString(j.at("judged").get<std::string>());
  r.latency = std::chrono::milliseconds(j.value("latencyMs", std::int64_t{0}));
  r.error = j.value("error", "");
}

std::string normalizeAnswer(std::string_view text) {
  std::string out;
  bool space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::ispunct(c)) continue;
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

Judged judge(std::string_view rawAnswer, std::span<const std::string> gold) {
  if (gold.empty()) throw ValidationError("judging needs at least one gold answer");
  std::vector<std::string> candidates = {normalizeAnswer(rawAnswer)};
  std::istringstream lines{std::string(rawAnswer)};
  for (std::string line; std::getline(lines, line);) candidates.push_back(normalizeAnswer(line));

  static const std::regex kEntityId(R"([QP][1-9][0-9]*)");
  for (const auto& g : gold) {
    const auto want = normalizeAnswer(g);
    if (want.empty()) continue;
    if (const auto expected = booleanToken(want); expected && want.find(' ') == std::string::npos) {
      for (const auto& c : candidates) {
        if (booleanToken(c) == expected) return Judged::correct;
      }
      continue;
    }
    for (const auto& c : candidates) {
      if (c == want) return Judged::correct;
    }
    const auto id = trim(g);
    if (std::regex_match(id, kEntityId)) {
      const std::regex word("\\b" + id + "\\b");
      if (std::regex_search(std::string(rawAnswer), word)) return Judged::correct;
    }
  }
  return Judged::incorrect;
}

std::string extractAnswer(std::string_view reply) {
  std::istringstream lines{std::string(reply)};
  std::optional<std::string> answer;
  for (std::string line; std::getline(lines, line);) {
    const auto t = trim(line);
    if (lower(t).rfind("answer:", 0) == 0) answer = trim(t.substr(7));
  }
  return answer ? *answer : trim(reply);
}

std::string_view to_string(Answerer answerer) {
  return answerer == Answerer::protocol ? "protocol" : "baseline";
}

Answerer answererFromString(std::string_view text) {
  const auto key = lower(text);
  if (key == "protocol") return Answerer::protocol;
  if (key == "baseline" || key == "directbaseline" || key == "direct") {
    return Answerer::directBaseline;
  }
  throw ConfigError("unknown answerer '" + std::string(text) + "' (protocol or baseline)");
}

std::vector<RunRecord> runBatch(std::span<const QuestionRecord> questions,
                                const BatchOptions& options,
                                std::shared_ptr<const kg::KgBackend> kg,
                                const llm::ChatGateway& gateway) {
  std::optional<protocol::ProtocolEngine> engine;
  if (options.answerer == Answerer::protocol) {
    engine.emplace(std::move(kg), gateway, options.budgets);
  }
  std::vector<RunRecord> records(questions.size());
  std::atomic<std::size_t> nextIndex{0};
  auto worker = [&] {
    for (auto i = nextIndex++; i < questions.size(); i = nextIndex++) {
      const auto& q = questions[i];
      auto& record = records[i];
      record.questionId = q.id;
      record.answererName = std::string(to_string(options.answerer));
      const auto start = std::chrono::steady_clock::now();
      try {
        auto cassette = openCassette(options, q);
        if (engine) {
          answerWithProtocol(q, *engine, cassette, record);
        } else {
          answerDirectly(q, gateway, cassette, record);
        }
        if (record.error.empty()) record.judged = judge(record.rawAnswer, q.gold);
      } catch (const std::exception& e) {
        record.judged = Judged::error;
        record.error = e.what();
      }
      record.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
    }
  };
  const auto threads = std::clamp<std::size_t>(options.parallelism, 1, std::max<std::size_t>(questions.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

std::int64_t accuracyTenths(std::size_t correct, std::size_t n) {
  if (n == 0) throw ValidationError("accuracy of an empty category is undefined");
  const auto c = static_cast<std::int64_t>(correct);
  const auto total = static_cast<std::int64_t>(n);
  return (2000 * c + total) / (2 * total);
}

std::string formatTenths(std::int64_t tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::int64_t CategoryScore::tenths() const { return accuracyTenths(correct, n); }

std::string CategoryScore::percent() const { return formatTenths(tenths()); }

const CategoryScore* AccuracyReport::find(Category category) const {
  for (const auto& [c, score] : perCategory) {
    if (c == category) return &score;
  }
  return nullptr;
}

AccuracyReport report(std::span<const RunRecord> records, std::span<const QuestionRecord> gold) {
  std::map<std::string, Category> categories;
  for (const auto& q : gold) categories[q.id] = q.category;
  std::map<Category, CategoryScore> scores;
  std::set<std::string> answerers;
  for (const auto& r : records) {
    const auto it = categories.find(r.questionId);
    if (it == categories.end()) {
      throw ReportError("run record for unknown question '" + r.questionId + "'");
    }
    auto& score = scores[it->second];
    ++score.n;
    if (r.judged == Judged::correct) ++score.correct;
    answerers.insert(r.answererName);
  }
  AccuracyReport out;
  for (const auto& a : answerers) out.answerer += (out.answerer.empty() ? "" : "+") + a;
  for (const auto category : kReportOrder) {
    const auto it = scores.find(category);
    if (it == scores.end()) {
      out.notices.push_back(std::string(displayName(category)) +
                            ": no records, category omitted");
      continue;
    }
    out.perCategory.emplace_back(category, it->second);
    out.overall.n += it->second.n;
    out.overall.correct += it->second.correct;
  }
  return out;
}

json reportJson(std::span<const AccuracyReport> reports) {
  json out = json::array();
  for (const auto& r : reports) {
    auto score = [](const CategoryScore& s) {
      json j{{"n", s.n}, {"correct", s.correct}};
      j["accuracy"] = s.n ? json(static_cast<double>(s.tenths()) / 10.0) : json(nullptr);
      return j;
    };
    json per = json::object();
    for (const auto& [c, s] : r.perCategory) per[std::string(to_string(c))] = score(s);
    out.push_back({{"answerer", r.answerer},
                   {"rules", r.rules},
                   {"perCategory", per},
                   {"overall", score(r.overall)},
                   {"notices", r.notices}});
  }
  return out;
}

std::string formatTable(std::span<const AccuracyReport> reports) {
  std::vector<std::string> header = {"Question Type"};
  for (const auto& r : reports) header.push_back(r.answerer + " Accuracy");
  std::vector<std::vector<std::string>> rows;
  for (const auto category : kReportOrder) {
    std::vector<std::string> row = {std::string(displayName(category))};
    bool any = false;
    for (const auto& r : reports) {
      const auto* s = r.find(category);
      any = any || s;
      row.push_back(s ? s->percent() + "% (" + std::to_string(s->correct) + "/" +
                            std::to_string(s->n) + ")"
                      : "-");
    }
    if (any) rows.push_back(std::move(row));
  }
  std::vector<std::string> overall = {"Overall"};
  for (const auto& r : reports) {
    overall.push_back(r.overall.n ? r.overall.percent() + "% (" +
                                        std::to_string(r.overall.correct) + "/" +
                                        std::to_string(r.overall.n) + ")"
                                  : "-");
  }
  rows.push_back(std::move(overall));

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = header[i].size();
    for (const auto& row : rows) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << "  ";
      out << std::left << std::setw(static_cast<int>(width[i])) << cells[i];
    }
    out << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (const auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) line(rows[i]);
  out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  line(rows.back());
  std::set<std::string> notices;
  for (const auto& r : reports) notices.insert(r.notices.begin(), r.notices.end());
  for (const auto& n : notices) out << "note: " << n << "\n";
  out << "judging rules: " << kJudgeRules << "\n";
  return out.str();
}

}  // namespace kgqa::eval
