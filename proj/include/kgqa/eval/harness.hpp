#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgqa/kg/backend.hpp"
#include "kgqa/llm/cassette.hpp"
#include "kgqa/llm/chat.hpp"
#include "kgqa/protocol/engine.hpp"

namespace kgqa::eval {

enum class Category { Comparative, YesNo, Generic, MultiHop, Intersection };

/// Report row order.
inline constexpr std::array<Category, 5> kReportOrder = {
    Category::Comparative, Category::YesNo, Category::Generic, Category::MultiHop,
    Category::Intersection};

std::string_view to_string(Category category);
/// "Yes/No", "Multi-Hop" and so on.
std::string_view displayName(Category category);
/// Case-insensitive; accepts the canonical names, the display names and
/// spellings without separators ("multihop", "yes_no"). Throws
/// ValidationError naming the text otherwise.
Category categoryFromString(std::string_view text);

struct QuestionRecord {
  std::string id;
  std::string text;
  Category category = Category::Generic;
  /// Accepted answer strings and/or entity ids.
  std::vector<std::string> gold;

  bool operator==(const QuestionRecord&) const = default;
};

/// One JSON object per line: {"id", "category", "text", "gold": [...]}.
/// Blank lines are skipped. Throws LoadError carrying the 0-based record
/// index for a schema violation, and for an empty bank.
std::vector<QuestionRecord> parseQuestions(std::istream& in);
std::vector<QuestionRecord> loadQuestions(const std::filesystem::path& path);

std::map<Category, std::size_t> categoryCounts(std::span<const QuestionRecord> questions);

enum class Judged { correct, incorrect, error };
std::string_view to_string(Judged judged);
Judged judgedFromString(std::string_view text);

struct RunRecord {
  std::string questionId;
  std::string answererName;
  std::optional<std::string> producedQuery;
  std::string rawAnswer;
  Judged judged = Judged::error;
  std::chrono::milliseconds latency{0};
  /// Why the record is judged=error.
  std::string error;

  bool operator==(const RunRecord&) const = default;
};

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

/// Version tag of the judging rules, written into every report.
inline constexpr std::string_view kJudgeRules = "norm-v1";

/// Case-fold, drop punctuation, trim and collapse whitespace.
std::string normalizeAnswer(std::string_view text);

/// Correct when some gold alternative equals the normalized answer, or one of
/// its lines. A gold entity id also matches when the answer contains that id
/// as a word. When the gold is yes/no, the answer's leading word is compared
/// as a boolean token.
Judged judge(std::string_view rawAnswer, std::span<const std::string> gold);

/// Text after the last "Answer:" line prefix, or the whole reply trimmed.
std::string extractAnswer(std::string_view reply);

enum class Answerer { protocol, directBaseline };
std::string_view to_string(Answerer answerer);
Answerer answererFromString(std::string_view text);

struct BatchOptions {
  Answerer answerer = Answerer::protocol;
  /// Per-question transcripts live at `<cassetteDir>/<answerer>/<id>.ndjson`.
  std::filesystem::path cassetteDir;
  llm::CassetteMode mode = llm::CassetteMode::replay;
  std::size_t parallelism = 1;
  protocol::Budgets budgets;
};

/// One record per question, in input order. A failing question becomes
/// judged=error and never aborts the batch. Running a batch is the
/// operator's approval to execute every generated query.
std::vector<RunRecord> runBatch(std::span<const QuestionRecord> questions,
                                const BatchOptions& options,
                                std::shared_ptr<const kg::KgBackend> kg,
                                const llm::ChatGateway& gateway);

struct CategoryScore {
  std::size_t n = 0;
  std::size_t correct = 0;

  /// 100·correct/n rounded half-up to one decimal, in tenths of a percent.
  std::int64_t tenths() const;
  /// "91.7"
  std::string percent() const;
  bool operator==(const CategoryScore&) const = default;
};

/// round_half_up(1000·c/n) using integer arithmetic. Requires n > 0.
std::int64_t accuracyTenths(std::size_t correct, std::size_t n);
std::string formatTenths(std::int64_t tenths);

struct AccuracyReport {
  std::string answerer;
  std::string rules{kJudgeRules};
  /// Non-empty categories in report order.
  std::vector<std::pair<Category, CategoryScore>> perCategory;
  CategoryScore overall;
  std::vector<std::string> notices;

  const CategoryScore* find(Category category) const;
  bool operator==(const AccuracyReport&) const = default;
};

/// Throws ReportError for a record whose question is not in `gold`.
AccuracyReport report(std::span<const RunRecord> records, std::span<const QuestionRecord> gold);

nlohmann::json reportJson(std::span<const AccuracyReport> reports);
/// Aligned text table with one accuracy column per report.
std::string formatTable(std::span<const AccuracyReport> reports);

}  // namespace kgqa::eval
