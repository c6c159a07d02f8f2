#include "kgqa/llm/cassette.hpp"

#include <fstream>

#include <json.hpp>

#include "kgqa/error.hpp"

namespace kgqa::llm {

using nlohmann::json;

std::string_view to_string(CassetteMode mode) {
  switch (mode) {
    case CassetteMode::live: return "live";
    case CassetteMode::record: return "record";
    case CassetteMode::replay: return "replay";
  }
  return "live";
}

CassetteMode cassetteModeFromString(std::string_view text) {
  if (text == "live") return CassetteMode::live;
  if (text == "record") return CassetteMode::record;
  if (text == "replay") return CassetteMode::replay;
  throw ConfigError("unknown cassette mode '" + std::string(text) + "'");
}

Cassette::Cassette(CassetteMode mode, std::vector<CassetteEntry> entries)
    : mode_(mode), entries_(std::move(entries)) {}

Cassette::Cassette(Cassette&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  mode_ = other.mode_;
  entries_ = std::move(other.entries_);
  cursor_ = other.cursor_;
  file_ = std::move(other.file_);
}

Cassette& Cassette::operator=(Cassette&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    mode_ = other.mode_;
    entries_ = std::move(other.entries_);
    cursor_ = other.cursor_;
    file_ = std::move(other.file_);
  }
  return *this;
}

std::vector<CassetteEntry> Cassette::readFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CassetteError("cassette file not found: " + path.string());
  std::vector<CassetteEntry> entries;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto& response = j.at("response");
      entries.push_back({j.at("digest").get<std::string>(),
                         response.is_string() ? response.get<std::string>() : response.dump()});
    } catch (const json::exception& e) {
      throw CassetteError("malformed cassette line " + std::to_string(lineNo) + " in " +
                          path.string() + ": " + e.what());
    }
  }
  return entries;
}

namespace {

std::string entryLine(const CassetteEntry& e) {
  json response;
  try {
    response = json::parse(e.response);
  } catch (const json::parse_error&) {
    response = e.response;
  }
  return json{{"digest", e.digest}, {"response", response}}.dump() + "\n";
}

}  // namespace

void Cassette::writeFile(const std::filesystem::path& path,
                         const std::vector<CassetteEntry>& entries) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CassetteError("cannot write cassette " + path.string());
  for (const auto& e : entries) out << entryLine(e);
}

Cassette Cassette::openReplay(const std::filesystem::path& path) {
  return Cassette(CassetteMode::replay, readFile(path));
}

Cassette Cassette::openRecord(const std::filesystem::path& path) {
  Cassette c(CassetteMode::record);
  writeFile(path, {});
  c.file_ = path;
  return c;
}

Cassette Cassette::openAppend(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return openRecord(path);
  Cassette c(CassetteMode::record, readFile(path));
  c.cursor_ = c.entries_.size();
  c.file_ = path;
  return c;
}

CassetteMode Cassette::mode() const {
  std::lock_guard lock(mutex_);
  return mode_;
}

std::size_t Cassette::position() const {
  std::lock_guard lock(mutex_);
  return cursor_;
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<CassetteEntry> Cassette::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

std::string Cassette::next(std::string_view digest) {
  std::lock_guard lock(mutex_);
  if (cursor_ >= entries_.size()) {
    throw CassetteError("cassette exhausted after " + std::to_string(entries_.size()) +
                            " entries; no reply for request " + std::string(digest),
                        std::string(digest));
  }
  const auto& entry = entries_[cursor_];
  if (entry.digest != digest) {
    throw CassetteError("cassette entry " + std::to_string(cursor_) + " expects request " +
                            entry.digest + " but got " + std::string(digest),
                        std::string(digest));
  }
  ++cursor_;
  return entry.response;
}

void Cassette::append(std::string digest, std::string response) {
  std::lock_guard lock(mutex_);
  CassetteEntry entry{std::move(digest), std::move(response)};
  if (file_) {
    std::ofstream out(*file_, std::ios::app);
    if (!out) throw CassetteError("cannot append to cassette " + file_->string());
    out << entryLine(entry);
  }
  entries_.push_back(std::move(entry));
  cursor_ = entries_.size();
}

void Cassette::seek(std::size_t position) {
  std::lock_guard lock(mutex_);
  if (position > entries_.size()) {
    throw CassetteError("cannot seek to entry " + std::to_string(position) + " of " +
                        std::to_string(entries_.size()));
  }
  cursor_ = position;
}

}  // namespace kgqa::llm
