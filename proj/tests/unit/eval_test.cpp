#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "kgqa/error.hpp"
#include "kgqa/eval/harness.hpp"
#include "kgqa/kg/stub_backend.hpp"

using namespace kgqa;
using namespace kgqa::eval;
namespace fs = std::filesystem;

namespace {

std::vector<QuestionRecord> syntheticBank(std::size_t perCategory) {
  std::vector<QuestionRecord> bank;
  for (auto c : kReportOrder) {
    for (std::size_t i = 0; i < perCategory; ++i) {
      bank.push_back({std::string(to_string(c)) + "-" + std::to_string(i), "question", c, {"gold"}});
    }
  }
  return bank;
}

/// Records answering the first `correct[c]` questions of each category right.
std::vector<RunRecord> syntheticRecords(const std::vector<QuestionRecord>& bank,
                                        const std::map<Category, std::size_t>& correct,
                                        const std::string& answerer) {
  std::map<Category, std::size_t> used;
  std::vector<RunRecord> out;
  for (const auto& q : bank) {
    RunRecord r;
    r.questionId = q.id;
    r.answererName = answerer;
    r.judged = used[q.category]++ < correct.at(q.category) ? Judged::correct : Judged::incorrect;
    out.push_back(r);
  }
  return out;
}

std::vector<std::string> percents(const AccuracyReport& report) {
  std::vector<std::string> out;
  for (const auto& [c, score] : report.perCategory) out.push_back(score.percent());
  return out;
}

std::shared_ptr<const kg::KgBackend> stubKg() {
  return std::make_shared<const kg::StubBackend>(
      kg::StubBackend::loadFile(fs::path(KGQA_FIXTURES) / "stub/kg.json"));
}

llm::ChatGateway offlineGateway() {
  return llm::ChatGateway(llm::LlmConfig{}, std::make_shared<kg::NoNetworkTransport>());
}

}  // namespace

TEST(Questions, LoadSampleBank) {
  auto bank = loadQuestions(fs::path(KGQA_DATA) / "sample_bank.jsonl");
  ASSERT_EQ(bank.size(), 5u);
  EXPECT_EQ(bank[1].category, Category::YesNo);
  EXPECT_EQ(bank[3].category, Category::MultiHop);
  for (auto [c, n] : categoryCounts(bank)) EXPECT_EQ(n, 1u) << to_string(c);
}

TEST(Questions, BankOf120HasTwentyFourPerCategory) {
  std::stringstream ss;
  for (const auto& q : syntheticBank(24)) {
    ss << nlohmann::json{{"id", q.id}, {"category", displayName(q.category)}, {"text", q.text}, {"gold", q.gold}}.dump()
       << "\n";
  }
  auto bank = parseQuestions(ss);
  EXPECT_EQ(bank.size(), 120u);
  auto counts = categoryCounts(bank);
  ASSERT_EQ(counts.size(), 5u);
  for (auto [c, n] : counts) EXPECT_EQ(n, 24u);
}

TEST(Questions, LoadErrors) {
  auto expectLoadError = [](const std::string& text, std::size_t index, const std::string& mention = {}) {
    std::stringstream ss(text);
    try {
      parseQuestions(ss);
      ADD_FAILURE() << "no error for " << text;
    } catch (const LoadError& e) {
      EXPECT_EQ(e.recordIndex(), index) << text;
      if (!mention.empty()) EXPECT_NE(std::string(e.what()).find(mention), std::string::npos) << e.what();
    }
  };
  expectLoadError("", 0);
  expectLoadError("\n\n", 0);
  const std::string good = R"({"id":"a","category":"Generic","text":"t","gold":["x"]})";
  expectLoadError(good + "\n" + R"({"id":"b","category":"Trivia","text":"t","gold":["x"]})", 1, "Trivia");
  expectLoadError(good + "\n{oops", 1);
  expectLoadError(R"({"id":"a","category":"Generic","gold":["x"]})", 0);
  expectLoadError(R"({"id":"a","category":"Generic","text":"t","gold":[]})", 0);
  expectLoadError(good + "\n" + good, 1);
  EXPECT_THROW(loadQuestions("/nonexistent/bank.jsonl"), LoadError);
}

TEST(Categories, Spellings) {
  EXPECT_EQ(categoryFromString("Yes/No"), Category::YesNo);
  EXPECT_EQ(categoryFromString("yes_no"), Category::YesNo);
  EXPECT_EQ(categoryFromString("multi-hop"), Category::MultiHop);
  EXPECT_EQ(categoryFromString("INTERSECTION"), Category::Intersection);
  EXPECT_THROW(categoryFromString("count"), ValidationError);
}

TEST(Judge, Examples) {
  std::vector<std::string> djokovic = {"Novak Djokovic"};
  EXPECT_EQ(judge("Novak Djokovic", djokovic), Judged::correct);
  EXPECT_EQ(judge("djokovic, novak", djokovic), Judged::incorrect);
  std::vector<std::string> fergie = {"Fergie", "Q51103"};
  EXPECT_EQ(judge("Fergie", fergie), Judged::correct);
  EXPECT_EQ(judge("  fergie. ", fergie), Judged::correct);
  EXPECT_EQ(judge("The answer is Q51103", fergie), Judged::correct);
  EXPECT_EQ(judge("Q511030", fergie), Judged::incorrect);
  EXPECT_EQ(judge("will.i.am", fergie), Judged::incorrect);
  std::vector<std::string> yes = {"Yes"};
  EXPECT_EQ(judge("Yes, she is.", yes), Judged::correct);
  EXPECT_EQ(judge("true", yes), Judged::correct);
  EXPECT_EQ(judge("No.", yes), Judged::incorrect);
  EXPECT_EQ(judge("Paris\nNovak Djokovic", djokovic), Judged::correct);
}

TEST(Judge, Normalization) {
  EXPECT_EQ(normalizeAnswer("  Novak   DJOKOVIC!! "), "novak djokovic");
  EXPECT_EQ(extractAnswer("Some prose.\nAnswer: Belgrade\n"), "Belgrade");
  EXPECT_EQ(extractAnswer("Answer: a\nAnswer: b"), "b");
  EXPECT_EQ(extractAnswer("  just text  "), "just text");
}

TEST(Report, KnownCountsGiveExactPercents) {
  const auto bank = syntheticBank(24);
  auto protocol = report(syntheticRecords(bank, {{Category::Comparative, 22}, {Category::YesNo, 21},
                                                 {Category::Generic, 19}, {Category::MultiHop, 18},
                                                 {Category::Intersection, 13}}, "protocol"), bank);
  EXPECT_EQ(percents(protocol), (std::vector<std::string>{"91.7", "87.5", "79.2", "75.0", "54.2"}));
  auto baseline = report(syntheticRecords(bank, {{Category::Comparative, 5}, {Category::YesNo, 13},
                                                 {Category::Generic, 8}, {Category::MultiHop, 4},
                                                 {Category::Intersection, 3}}, "baseline"), bank);
  EXPECT_EQ(percents(baseline), (std::vector<std::string>{"20.8", "54.2", "33.3", "16.7", "12.5"}));
  EXPECT_EQ(protocol.overall.n, 120u);
  EXPECT_EQ(protocol.overall.correct, 93u);
  EXPECT_EQ(protocol.rules, "norm-v1");

  std::vector<AccuracyReport> both = {protocol, baseline};
  auto table = formatTable(both);
  EXPECT_NE(table.find("Yes/No"), std::string::npos);
  EXPECT_NE(table.find("91.7"), std::string::npos);
  EXPECT_NE(table.find("12.5"), std::string::npos);
  auto j = reportJson(both);
  EXPECT_EQ(j[0]["perCategory"]["Comparative"]["accuracy"], 91.7);
  EXPECT_EQ(j[1]["overall"]["n"], 120);
}

TEST(Report, RoundingProperty) {
  std::mt19937 rng(7);
  for (int i = 0; i < 5000; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 2000)(rng);
    const std::size_t c = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    // Exact rational half-up rounding of 1000c/n.
    const auto num = 1000 * c;
    auto expected = static_cast<std::int64_t>(num / n);
    if (2 * (num % n) >= n) ++expected;
    ASSERT_EQ(accuracyTenths(c, n), expected) << c << "/" << n;
  }
  EXPECT_EQ(formatTenths(917), "91.7");
  EXPECT_EQ(formatTenths(1000), "100.0");
  EXPECT_EQ(formatTenths(5), "0.5");
  EXPECT_EQ(accuracyTenths(1, 8), 125);
  EXPECT_EQ(accuracyTenths(1, 16), 63);
}

TEST(Report, OrderIndependentAndErrorsNeverCount) {
  const auto bank = syntheticBank(4);
  auto records = syntheticRecords(bank, {{Category::Comparative, 1}, {Category::YesNo, 2},
                                         {Category::Generic, 3}, {Category::MultiHop, 4},
                                         {Category::Intersection, 0}}, "p");
  records[3].judged = Judged::error;
  const auto base = report(records, bank);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    EXPECT_EQ(report(records, bank), base);
  }
  EXPECT_EQ(base.find(Category::Comparative)->correct, 1u);
}

TEST(Report, MissingCategoryAndUnknownQuestion) {
  const auto bank = syntheticBank(2);
  std::vector<RunRecord> records;
  for (const auto& q : bank) {
    if (q.category != Category::Generic) records.push_back({q.id, "p", {}, "", Judged::correct, {}, ""});
  }
  auto r = report(records, bank);
  EXPECT_EQ(r.perCategory.size(), 4u);
  EXPECT_EQ(r.find(Category::Generic), nullptr);
  ASSERT_EQ(r.notices.size(), 1u);
  EXPECT_NE(r.notices[0].find("Generic"), std::string::npos);
  records.push_back({"nope", "p", {}, "", Judged::correct, {}, ""});
  EXPECT_THROW(report(records, bank), ReportError);
}

TEST(RunRecordJson, RoundTrip) {
  RunRecord r{"gen-1", "protocol", "SELECT ?x WHERE { ?x ?p ?o }", "Novak", Judged::correct,
              std::chrono::milliseconds(12), ""};
  nlohmann::json j = r;
  EXPECT_EQ(j["answerer"], "protocol");
  EXPECT_EQ(j["latencyMs"], 12);
  EXPECT_EQ(j.get<RunRecord>(), r);
}

TEST(Batch, ReplaysRecordedCassettes) {
  auto bank = loadQuestions(fs::path(KGQA_DATA) / "sample_bank.jsonl");
  BatchOptions options;
  options.cassetteDir = fs::path(KGQA_FIXTURES) / "eval";
  options.parallelism = 3;
  auto gw = offlineGateway();
  auto protocol = runBatch(bank, options, stubKg(), gw);
  ASSERT_EQ(protocol.size(), 5u);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    EXPECT_EQ(protocol[i].questionId, bank[i].id);
    EXPECT_EQ(protocol[i].judged, Judged::correct) << bank[i].id << ": " << protocol[i].error;
    EXPECT_TRUE(protocol[i].producedQuery);
  }
  options.answerer = Answerer::directBaseline;
  auto baseline = runBatch(bank, options, stubKg(), gw);
  auto r = report(baseline, bank);
  EXPECT_EQ(r.overall.correct, 2u);
  EXPECT_EQ(r.answerer, "baseline");
  for (const auto& rec : baseline) EXPECT_FALSE(rec.producedQuery);
}

TEST(Batch, CassetteMissIsolatedToOneQuestion) {
  auto tmp = fs::temp_directory_path() / "kgqa-eval-miss";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "protocol");
  for (const auto& e : fs::directory_iterator(fs::path(KGQA_FIXTURES) / "eval/protocol")) {
    if (e.path().stem() != "yn-1") fs::copy_file(e.path(), tmp / "protocol" / e.path().filename());
  }
  auto bank = loadQuestions(fs::path(KGQA_DATA) / "sample_bank.jsonl");
  BatchOptions options;
  options.cassetteDir = tmp;
  auto gw = offlineGateway();
  auto records = runBatch(std::span(bank).first(3), options, stubKg(), gw);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].judged, Judged::correct);
  EXPECT_EQ(records[1].judged, Judged::error);
  EXPECT_FALSE(records[1].error.empty());
  EXPECT_EQ(records[2].judged, Judged::correct);
  fs::remove_all(tmp);
}
