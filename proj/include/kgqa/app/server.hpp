#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgqa/app/config.hpp"
#include "kgqa/app/store.hpp"
#include "kgqa/protocol/session.hpp"

namespace httplib {
class Server;
}

namespace kgqa::app {

/// Session JSON plus what the UI derives from it: the query, its structure
/// graph labelled from the entity-relation table, the results graph and
/// status flags.
nlohmann::json sessionSnapshot(const protocol::Session& session);

/// HTTP API over the protocol engine:
///
///   POST /api/sessions                  {question} -> {sessionId}
///   POST /api/sessions/{id}/message     {text} | {widget:{kind, editedText}}
///   GET  /api/sessions/{id}/events?from=N[&follow=0][&wait=ms]
///   GET  /api/sessions/{id}
///   POST /api/sessions/{id}/execute
///   PUT  /api/sessions/{id}/query       {sparql}
///   GET  /api/health
///
/// Protocol work runs on a per-session serial queue; the event stream is
/// newline-delimited JSON held open until the client leaves or the server
/// stops.
class AppServer {
 public:
  explicit AppServer(Runtime& runtime);
  ~AppServer();

  AppServer(const AppServer&) = delete;
  AppServer& operator=(const AppServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port. Throws ConfigError when binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  /// Stops accepting requests, ends open streams, drains queued protocol
  /// work and writes every loaded session to the store.
  void stop();

  /// Waits until no protocol work is queued or running.
  void waitIdle();

 private:
  struct Slot;

  void routes();
  std::shared_ptr<Slot> slot(const std::string& id);
  /// Queues `task` unless the session already has work pending. Returns
  /// false when busy.
  bool submit(const std::shared_ptr<Slot>& slot, std::function<void(Slot&)> task);
  void workerLoop();
  void publish(const protocol::Session& session, const protocol::StateEvent& event);
  void continueProtocol(Slot& slot);
  bool busy(const Slot& slot);

  Runtime& runtime_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> http_;
  std::thread listener_;

  std::mutex slotsMutex_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;

  std::mutex workMutex_;
  std::condition_variable workCv_;
  std::condition_variable idleCv_;
  std::deque<std::pair<std::shared_ptr<Slot>, std::function<void(Slot&)>>> queue_;
  std::size_t runningTasks_ = 0;
  bool workersStop_ = false;
  std::vector<std::thread> workers_;

  std::atomic<bool> stopping_{false};
};

}  // namespace kgqa::app
