#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa::llm {

enum class CassetteMode { live, record, replay };

std::string_view to_string(CassetteMode mode);
/// Throws ConfigError for anything but live/record/replay.
CassetteMode cassetteModeFromString(std::string_view text);

struct CassetteEntry {
  std::string digest;
  std::string response;

  bool operator==(const CassetteEntry&) const = default;
};

/// Ordered request-digest → response transcript of one conversation.
///
/// Replay consumes entries strictly in order: the next request must match the
/// next entry's digest. Record appends each exchange and, when file-backed,
/// writes it out immediately as one NDJSON line `{"digest":…,"response":…}`.
class Cassette {
 public:
  Cassette() = default;
  explicit Cassette(CassetteMode mode, std::vector<CassetteEntry> entries = {});
  Cassette(Cassette&& other) noexcept;
  Cassette& operator=(Cassette&& other) noexcept;

  /// Replay from a file. Throws CassetteError when missing or malformed.
  static Cassette openReplay(const std::filesystem::path& path);
  /// Start a fresh recording that truncates `path`.
  static Cassette openRecord(const std::filesystem::path& path);
  /// Continue recording into `path`, keeping the exchanges already in it.
  static Cassette openAppend(const std::filesystem::path& path);
  static Cassette live() { return Cassette(CassetteMode::live); }

  CassetteMode mode() const;
  std::size_t position() const;
  std::size_t size() const;
  std::vector<CassetteEntry> entries() const;

  /// Replay lookup. Throws CassetteError naming the digest on a mismatch or
  /// when the transcript is exhausted; the cursor then stays put.
  std::string next(std::string_view digest);
  void append(std::string digest, std::string response);
  /// Moves the replay cursor, e.g. after reloading a persisted session.
  void seek(std::size_t position);

  static std::vector<CassetteEntry> readFile(const std::filesystem::path& path);
  static void writeFile(const std::filesystem::path& path, const std::vector<CassetteEntry>& entries);

 private:
  CassetteMode mode_ = CassetteMode::live;
  std::vector<CassetteEntry> entries_;
  std::size_t cursor_ = 0;
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mutex_;
};

}  // namespace kgqa::llm
