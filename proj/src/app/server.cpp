#include "kgqa/app/server.hpp"

#include <httplib.h>

#include <random>

#include "kgqa/codec.hpp"
#include "kgqa/sparql/graph.hpp"
#include "kgqa/sparql/query.hpp"

namespace kgqa::app {

using nlohmann::json;
using protocol::Session;
using protocol::StateEvent;

struct AppServer::Slot {
  std::string id;
  std::mutex mutex;
  Session session;
  llm::Cassette cassette;
  bool pending = false;

  std::mutex eventMutex;
  std::condition_variable eventCv;
  std::vector<StateEvent> published;
};

namespace {

constexpr std::size_t kWorkers = 4;

int statusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::unsupported_form:
    case ErrorKind::empty_graph:
    case ErrorKind::action_parse:
      return 400;
    case ErrorKind::protocol:
      return 409;
    case ErrorKind::cassette:
    case ErrorKind::query:
    case ErrorKind::join:
      return 422;
    case ErrorKind::transport:
    case ErrorKind::auth:
      return 502;
    case ErrorKind::timeout:
      return 504;
    default:
      return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void replyError(httplib::Response& res, int status, std::string_view kind,
                const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  reply(res, status, extra);
}

void replyError(httplib::Response& res, const Error& e) {
  json extra = json::object();
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) {
    extra["line"] = p->line();
    extra["column"] = p->column();
  }
  replyError(res, statusFor(e.kind()), to_string(e.kind()), e.what(), extra);
}

std::optional<json> parseBody(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = json::parse(req.body);
    if (j.is_object()) return j;
  } catch (const json::parse_error&) {
  }
  replyError(res, 400, "validation", "request body must be a JSON object");
  return std::nullopt;
}

std::string newSessionId() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id = "s-";
  auto bits = rng();
  for (int i = 0; i < 12; ++i, bits >>= 4) id += kHex[bits & 0xf];
  return id;
}

const std::string& originalQuestion(const Session& s) {
  for (const auto& m : s.history) {
    if (m.role == llm::Role::user) return m.content;
  }
  return s.question;
}

}  // namespace

json sessionSnapshot(const Session& session) {
  json out = session;
  out["query"] = out["generatedQuery"];
  out["entityRelationTable"] = session.entityTable;
  out["queryGraph"] = nullptr;
  out["resultsGraph"] = nullptr;
  if (session.generatedQuery) {
    try {
      const auto parsed = sparql::parseSelect(session.generatedQuery->sparql);
      auto graph = sparql::buildQueryGraph(parsed);
      sparql::applyLabels(graph, session.entityTable);
      out["queryGraph"] = graph;
      if (session.results) {
        const auto projected = parsed.projectedVariables();
        try {
          out["resultsGraph"] = sparql::buildResultsGraph(graph, projected, *session.results);
        } catch (const JoinError& e) {
          out["resultsGraphError"] = e.what();
        }
      }
    } catch (const Error& e) {
      out["queryGraphError"] = e.what();
    }
  }
  bool empty = false;
  for (const auto& e : session.events) empty = empty || e.kind == protocol::EventKind::empty_results;
  out["flags"] = {{"awaitingUser", session.awaitingUser},
                  {"hasQuery", session.generatedQuery.has_value()},
                  {"hallucination", !session.hallucinatedIds.empty()},
                  {"emptyResults", session.results && session.results->rows.empty()},
                  {"emptyResultsWarned", empty},
                  {"done", session.stage.detail == protocol::Detail::done}};
  out["stageTrace"] = protocol::stageTrace(session.events);
  return out;
}

AppServer::AppServer(Runtime& runtime)
    : runtime_(runtime),
      store_(runtime.config().sessionStoreDir),
      http_(std::make_unique<httplib::Server>()) {
  runtime_.engine().setObserver(
      [this](const Session& s, const StateEvent& e) { publish(s, e); });
  for (std::size_t i = 0; i < kWorkers; ++i) workers_.emplace_back([this] { workerLoop(); });
  routes();
}

AppServer::~AppServer() {
  stop();
  runtime_.engine().setObserver({});
}

void AppServer::publish(const Session& session, const StateEvent& event) {
  std::shared_ptr<Slot> target;
  {
    std::lock_guard lock(slotsMutex_);
    if (auto it = slots_.find(session.id); it != slots_.end()) target = it->second;
  }
  store_.save(session);
  if (!target) return;
  {
    std::lock_guard lock(target->eventMutex);
    target->published.push_back(event);
  }
  target->eventCv.notify_all();
}

std::shared_ptr<AppServer::Slot> AppServer::slot(const std::string& id) {
  if (!isValidSessionId(id)) return nullptr;
  std::lock_guard lock(slotsMutex_);
  if (auto it = slots_.find(id); it != slots_.end()) return it->second;
  auto loaded = store_.load(id);
  if (!loaded) return nullptr;
  auto s = std::make_shared<Slot>();
  s->id = id;
  s->session = std::move(*loaded);
  s->published = s->session.events;
  s->cassette = runtime_.openCassette(originalQuestion(s->session), s->session.llmCalls, true);
  slots_[id] = s;
  return s;
}

bool AppServer::busy(const Slot& s) {
  std::lock_guard lock(workMutex_);
  return s.pending;
}

bool AppServer::submit(const std::shared_ptr<Slot>& s, std::function<void(Slot&)> task) {
  {
    std::lock_guard lock(workMutex_);
    if (s->pending || workersStop_) return false;
    s->pending = true;
    queue_.emplace_back(s, std::move(task));
  }
  workCv_.notify_one();
  return true;
}

void AppServer::workerLoop() {
  for (;;) {
    std::pair<std::shared_ptr<Slot>, std::function<void(Slot&)>> item;
    {
      std::unique_lock lock(workMutex_);
      workCv_.wait(lock, [&] { return workersStop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      item = std::move(queue_.front());
      queue_.pop_front();
      ++runningTasks_;
    }
    auto& s = *item.first;
    {
      std::lock_guard lock(s.mutex);
      try {
        item.second(s);
      } catch (const Error& e) {
        s.session.lastError = protocol::SessionError{e.kind(), e.what()};
      } catch (const std::exception& e) {
        s.session.lastError = protocol::SessionError{ErrorKind::protocol, e.what()};
      }
      store_.save(s.session);
    }
    {
      std::lock_guard lock(workMutex_);
      s.pending = false;
      --runningTasks_;
    }
    idleCv_.notify_all();
  }
}

void AppServer::waitIdle() {
  std::unique_lock lock(workMutex_);
  idleCv_.wait(lock, [&] { return queue_.empty() && runningTasks_ == 0; });
}

void AppServer::continueProtocol(Slot& s) {
  runtime_.engine().advance(s.session, s.cassette);
}

void AppServer::routes() {
  auto& svr = *http_;

  svr.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200,
          {{"status", "ok"},
           {"backend", runtime_.kg()->name()},
           {"cassetteMode", llm::to_string(runtime_.config().cassetteMode)}});
  });

  svr.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"sessions", store_.ids()}});
  });

  svr.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parseBody(req, res);
    if (!body) return;
    if (!body->contains("question") || !(*body)["question"].is_string()) {
      return replyError(res, 400, "validation", "\"question\" must be a string");
    }
    const auto question = (*body)["question"].get<std::string>();
    auto s = std::make_shared<Slot>();
    s->id = newSessionId();
    try {
      s->cassette = runtime_.openCassette(question);
      {
        std::lock_guard lock(slotsMutex_);
        slots_[s->id] = s;
      }
      std::lock_guard lock(s->mutex);
      s->session = runtime_.engine().startSession(question, s->id);
      store_.save(s->session);
    } catch (const Error& e) {
      std::lock_guard lock(slotsMutex_);
      slots_.erase(s->id);
      return replyError(res, e);
    }
    submit(s, [this](Slot& slot) { continueProtocol(slot); });
    reply(res, 201, {{"sessionId", s->id}});
  });

  svr.Get(R"(/api/sessions/([A-Za-z0-9_-]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            auto s = slot(req.matches[1]);
            if (!s) return replyError(res, 404, "not_found", "no such session");
            std::lock_guard lock(s->mutex);
            auto snapshot = sessionSnapshot(s->session);
            snapshot["flags"]["busy"] = busy(*s);
            reply(res, 200, snapshot);
          });

  svr.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/message)",
           [this](const httplib::Request& req, httplib::Response& res) {
             auto s = slot(req.matches[1]);
             if (!s) return replyError(res, 404, "not_found", "no such session");
             auto body = parseBody(req, res);
             if (!body) return;
             if (busy(*s)) return replyError(res, 409, "busy", "the session is still working");
             std::function<void(Slot&)> task;
             if (body->contains("widget")) {
               const auto& w = (*body)["widget"];
               try {
                 const auto kind = protocol::widgetFromString(w.value("kind", ""));
                 const auto text = w.value("editedText", "");
                 task = [this, kind, text](Slot& slot) {
                   runtime_.engine().applyPromptWidget(slot.session, kind, text);
                   continueProtocol(slot);
                 };
               } catch (const Error& e) {
                 return replyError(res, e);
               } catch (const json::exception& e) {
                 return replyError(res, 400, "validation", e.what());
               }
             } else if (body->contains("text") && (*body)["text"].is_string()) {
               const auto text = (*body)["text"].get<std::string>();
               if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
                 return replyError(res, 400, "validation", "message text must not be empty");
               }
               {
                 std::lock_guard lock(s->mutex);
                 if (!s->session.awaitingUser) {
                   return replyError(res, 409, "protocol",
                                     "the LLM is not waiting for a reply; use a prompt widget");
                 }
               }
               task = [this, text](Slot& slot) {
                 runtime_.engine().replyToClarification(slot.session, text);
                 continueProtocol(slot);
               };
             } else {
               return replyError(res, 400, "validation", "send {text} or {widget:{kind, editedText}}");
             }
             if (!submit(s, std::move(task))) {
               return replyError(res, 409, "busy", "the session is still working");
             }
             reply(res, 202, {{"accepted", true}});
           });

  svr.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/execute)",
           [this](const httplib::Request& req, httplib::Response& res) {
             auto s = slot(req.matches[1]);
             if (!s) return replyError(res, 404, "not_found", "no such session");
             if (busy(*s)) return replyError(res, 409, "busy", "the session is still working");
             {
               std::lock_guard lock(s->mutex);
               if (!s->session.generatedQuery) {
                 return replyError(res, 409, "protocol", "there is no query to execute yet");
               }
             }
             const bool queued = submit(s, [this](Slot& slot) {
               runtime_.engine().executeAndSummarize(slot.session, slot.cassette,
                                                     protocol::UserApproval{});
             });
             if (!queued) return replyError(res, 409, "busy", "the session is still working");
             reply(res, 202, {{"accepted", true}});
           });

  svr.Put(R"(/api/sessions/([A-Za-z0-9_-]+)/query)",
          [this](const httplib::Request& req, httplib::Response& res) {
            auto s = slot(req.matches[1]);
            if (!s) return replyError(res, 404, "not_found", "no such session");
            auto body = parseBody(req, res);
            if (!body) return;
            if (!body->contains("sparql") || !(*body)["sparql"].is_string()) {
              return replyError(res, 400, "validation", "\"sparql\" must be a string");
            }
            if (busy(*s)) return replyError(res, 409, "busy", "the session is still working");
            std::lock_guard lock(s->mutex);
            try {
              runtime_.engine().replaceQuery(s->session, (*body)["sparql"].get<std::string>());
            } catch (const Error& e) {
              return replyError(res, e);
            }
            store_.save(s->session);
            reply(res, 200, sessionSnapshot(s->session));
          });

  svr.Get(R"(/api/sessions/([A-Za-z0-9_-]+)/events)",
          [this](const httplib::Request& req, httplib::Response& res) {
            auto s = slot(req.matches[1]);
            if (!s) return replyError(res, 404, "not_found", "no such session");
            std::size_t from = 0;
            bool follow = true;
            std::optional<std::chrono::steady_clock::time_point> deadline;
            try {
              if (req.has_param("from")) from = std::stoul(req.get_param_value("from"));
              if (req.has_param("follow")) follow = req.get_param_value("follow") != "0";
              if (req.has_param("wait")) {
                deadline = std::chrono::steady_clock::now() +
                           std::chrono::milliseconds(std::stol(req.get_param_value("wait")));
              }
            } catch (const std::exception&) {
              return replyError(res, 400, "validation", "from and wait must be integers");
            }
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "application/x-ndjson",
                [this, s, next = from, follow, deadline](std::size_t,
                                                         httplib::DataSink& sink) mutable {
                  std::vector<StateEvent> batch;
                  {
                    std::unique_lock lock(s->eventMutex);
                    s->eventCv.wait_for(lock, std::chrono::milliseconds(100), [&] {
                      return s->published.size() > next || stopping_.load();
                    });
                    for (; next < s->published.size(); ++next) batch.push_back(s->published[next]);
                  }
                  for (const auto& e : batch) {
                    const auto line = json(e).dump() + "\n";
                    if (!sink.write(line.data(), line.size())) return false;
                  }
                  const bool expired = deadline && std::chrono::steady_clock::now() >= *deadline;
                  if (stopping_ || (!follow && batch.empty()) || expired) sink.done();
                  return true;
                });
          });
}

int AppServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }
  listener_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void AppServer::run(const std::string& host, int port) {
  if (!http_->bind_to_port(host, port)) {
    throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }
  http_->listen_after_bind();
}

void AppServer::stop() {
  if (stopping_.exchange(true)) return;
  {
    std::lock_guard lock(slotsMutex_);
    for (auto& [id, s] : slots_) s->eventCv.notify_all();
  }
  http_->stop();
  if (listener_.joinable()) listener_.join();
  {
    std::lock_guard lock(workMutex_);
    workersStop_ = true;
  }
  workCv_.notify_all();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  std::lock_guard lock(slotsMutex_);
  for (auto& [id, s] : slots_) {
    std::lock_guard sessionLock(s->mutex);
    store_.save(s->session);
  }
}

}  // namespace kgqa::app
