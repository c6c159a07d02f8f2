#include "kgqa/kg/transport.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "kgqa/error.hpp"
#include "kgqa/util/digest.hpp"

namespace kgqa::kg {
namespace fs = std::filesystem;

std::string canonicalRequest(const HttpRequest& request) {
  auto params = request.params;
  std::sort(params.begin(), params.end());
  std::string out = request.method + " " + request.url + "\n";
  for (const auto& [k, v] : params) out += k + "=" + v + "\n";
  out += "\n";
  out += request.body;
  return out;
}

std::string fixtureKey(const HttpRequest& request) {
  return util::sha256Hex(canonicalRequest(request)).substr(0, 24);
}

std::string hostOf(const std::string& url) {
  auto start = url.find("://");
  start = start == std::string::npos ? 0 : start + 3;
  auto end = url.find('/', start);
  return url.substr(0, end == std::string::npos ? url.size() : end);
}

LiveTransport::LiveTransport(std::string userAgent) : userAgent_(std::move(userAgent)) {}

HttpResponse LiveTransport::send(const HttpRequest& request) {
  const std::string host = hostOf(request.url);
  std::string path = request.url.substr(host.size());
  if (path.empty()) path = "/";

  httplib::Client client(host);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);

  httplib::Headers headers{{"User-Agent", userAgent_}};
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  httplib::Params params;
  for (const auto& [k, v] : request.params) params.emplace(k, v);

  httplib::Result result;
  if (request.method == "GET") {
    result = client.Get(path, params, headers);
  } else if (request.method == "POST") {
    std::string target = path;
    if (!params.empty()) target += "?" + httplib::detail::params_to_query_str(params);
    result = client.Post(target, headers, request.body,
                         request.contentType.empty() ? "application/json" : request.contentType);
  } else {
    throw TransportError("unsupported HTTP method " + request.method, 0);
  }

  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw TimeoutError("request to " + host + " timed out (" + httplib::to_string(err) + ")");
    }
    throw TransportError("request to " + host + " failed: " + httplib::to_string(err), 0);
  }
  return HttpResponse{result->status, result->body};
}

PoliteTransport::PoliteTransport(std::shared_ptr<HttpTransport> inner,
                                 std::chrono::milliseconds backoff)
    : inner_(std::move(inner)), backoff_(backoff) {}

std::mutex& PoliteTransport::hostMutex(const std::string& host) {
  std::lock_guard lock(mapMutex_);
  auto& slot = hostMutexes_[host];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

HttpResponse PoliteTransport::send(const HttpRequest& request) {
  std::lock_guard hostLock(hostMutex(hostOf(request.url)));
  auto transient = [](int status) { return status == 429 || status >= 500; };
  try {
    auto response = inner_->send(request);
    if (!transient(response.status)) return response;
  } catch (const TimeoutError&) {
    throw;
  } catch (const TransportError&) {
  }
  std::this_thread::sleep_for(backoff_);
  return inner_->send(request);
}

FixtureStore::FixtureStore(fs::path dir) : dir_(std::move(dir)) {}

namespace {

std::optional<std::string> readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CassetteError("cannot write fixture " + path.string());
  out << content;
}

}  // namespace

std::optional<HttpResponse> FixtureStore::lookup(const HttpRequest& request) const {
  const auto key = fixtureKey(request);
  std::lock_guard lock(mutex_);
  auto body = readFile(dir_ / (key + ".json"));
  if (!body) return std::nullopt;
  int status = 200;
  if (auto s = readFile(dir_ / (key + ".status"))) status = std::stoi(*s);
  return HttpResponse{status, std::move(*body)};
}

void FixtureStore::store(const HttpRequest& request, const HttpResponse& response) {
  const auto key = fixtureKey(request);
  std::lock_guard lock(mutex_);
  fs::create_directories(dir_);
  writeFile(dir_ / (key + ".json"), response.body);
  writeFile(dir_ / (key + ".request"), canonicalRequest(request));
  if (response.status != 200) {
    writeFile(dir_ / (key + ".status"), std::to_string(response.status));
  } else {
    fs::remove(dir_ / (key + ".status"));
  }
}

ReplayTransport::ReplayTransport(std::shared_ptr<FixtureStore> store) : store_(std::move(store)) {}

HttpResponse ReplayTransport::send(const HttpRequest& request) {
  if (auto hit = store_->lookup(request)) return *hit;
  const auto key = fixtureKey(request);
  throw CassetteError("no fixture " + key + " in " + store_->dir().string() + " for request:\n" +
                          canonicalRequest(request),
                      key);
}

RecordingTransport::RecordingTransport(std::shared_ptr<HttpTransport> inner,
                                       std::shared_ptr<FixtureStore> store)
    : inner_(std::move(inner)), store_(std::move(store)) {}

HttpResponse RecordingTransport::send(const HttpRequest& request) {
  auto response = inner_->send(request);
  store_->store(request, response);
  return response;
}

HttpResponse NoNetworkTransport::send(const HttpRequest& request) {
  throw TransportError("network access is disabled (attempted " + request.method + " " +
                           request.url + ")",
                       0);
}

}  // namespace kgqa::kg
