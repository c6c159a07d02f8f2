#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kgqa::kg {

struct HttpRequest {
  std::string method = "GET";
  /// scheme://host[:port]/path, without a query string.
  std::string url;
  std::vector<std::pair<std::string, std::string>> params;
  /// Not part of the canonical key.
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string contentType;
  std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Canonical text of a request: method, URL, parameters sorted by (key,
/// value) and the body. Headers are excluded.
///
///   GET https://host/path
///   key=value
///   key=value
///
///   <body>
std::string canonicalRequest(const HttpRequest& request);

/// Short stable key of the canonical request, used as the fixture file stem.
std::string fixtureKey(const HttpRequest& request);

std::string hostOf(const std::string& url);

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Returns any HTTP response; throws TransportError/TimeoutError only when
  /// no response was received.
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real network I/O through cpp-httplib.
class LiveTransport final : public HttpTransport {
 public:
  explicit LiveTransport(std::string userAgent = "kgqa/0.1");
  HttpResponse send(const HttpRequest& request) override;

 private:
  std::string userAgent_;
};

/// Serialises requests per host and retries once on a transient failure
/// (no response, 429 or 5xx) after a fixed backoff.
class PoliteTransport final : public HttpTransport {
 public:
  explicit PoliteTransport(std::shared_ptr<HttpTransport> inner,
                           std::chrono::milliseconds backoff = std::chrono::seconds(1));
  HttpResponse send(const HttpRequest& request) override;

 private:
  std::mutex& hostMutex(const std::string& host);

  std::shared_ptr<HttpTransport> inner_;
  std::chrono::milliseconds backoff_;
  std::mutex mapMutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> hostMutexes_;
};

/// Fixture directory: `<dir>/<key>.json` holds the verbatim body,
/// `<key>.status` the HTTP status when it is not 200, and `<key>.request` the
/// canonical request text for humans.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  std::optional<HttpResponse> lookup(const HttpRequest& request) const;
  void store(const HttpRequest& request, const HttpResponse& response);
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/// Serves responses from fixtures only. A miss throws CassetteError.
class ReplayTransport final : public HttpTransport {
 public:
  explicit ReplayTransport(std::shared_ptr<FixtureStore> store);
  HttpResponse send(const HttpRequest& request) override;

 private:
  std::shared_ptr<FixtureStore> store_;
};

/// Forwards to `inner` and writes every response into the store.
class RecordingTransport final : public HttpTransport {
 public:
  RecordingTransport(std::shared_ptr<HttpTransport> inner, std::shared_ptr<FixtureStore> store);
  HttpResponse send(const HttpRequest& request) override;

 private:
  std::shared_ptr<HttpTransport> inner_;
  std::shared_ptr<FixtureStore> store_;
};

/// Answers from a callback. Used for scripted LLM replies and in tests.
class CallbackTransport final : public HttpTransport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  explicit CallbackTransport(Handler handler) : handler_(std::move(handler)) {}
  HttpResponse send(const HttpRequest& request) override { return handler_(request); }

 private:
  Handler handler_;
};

/// Throws on any use; proves a code path performs no network I/O.
class NoNetworkTransport final : public HttpTransport {
 public:
  HttpResponse send(const HttpRequest& request) override;
};

}  // namespace kgqa::kg
