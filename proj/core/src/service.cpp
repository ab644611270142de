// Copyright 2026 The Filmflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "filmflow/service.hpp"

#include <httplib.h>

#include <atomic>
#include <condition_variable>

#include "filmflow/crew.hpp"
#include "filmflow/error.hpp"
#include "filmflow/pipeline_io.hpp"

namespace filmflow {

RunRequest parse_run_request(const nlohmann::json& body) {
  if (!body.is_object()) throw Error(ErrorCode::kBadRequest, "run request must be an object");
  RunRequest request;
  try {
    const auto& pipeline = body.at("pipeline");
    if (pipeline.is_string()) {
      try {
        request.pipeline = preset_by_name(pipeline.get<std::string>());
      } catch (const Error& e) {
        throw Error(ErrorCode::kBadRequest, e.what());
      }
    } else {
      request.pipeline = pipeline.get<PipelineDef>();
    }
    if (body.contains("mode")) {
      request.mode = scheduling_mode_from_string(body.at("mode").get<std::string>());
    }
    request.seed = body.value("seed", kDefaultSeed);
    const auto clock = body.value("clock", std::string{"virtual"});
    if (clock != "virtual" && clock != "wall") {
      throw Error(ErrorCode::kBadRequest, "unknown clock '" + clock + "'");
    }
    request.virtual_clock = clock == "virtual";
    if (body.contains("feedback_trace") && !body.at("feedback_trace").is_null()) {
      request.feedback_trace = parse_feedback_trace(body.at("feedback_trace"));
    }
    if (body.contains("policy")) {
      request.policy = FrequencyPolicy::from_name(body.at("policy").get<std::string>());
    }
    if (body.contains("tick_ms")) request.tick_ms = body.at("tick_ms").get<int>();
    if (body.contains("review_window_ms")) {
      request.review_window_ms = body.at("review_window_ms").get<std::int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadRequest, std::string("malformed run request: ") + e.what());
  }
  if (request.tick_ms && *request.tick_ms < 0) {
    throw Error(ErrorCode::kBadRequest, "tick_ms must be nonnegative");
  }
  if (request.review_window_ms && *request.review_window_ms < 0) {
    throw Error(ErrorCode::kBadRequest, "review_window_ms must be nonnegative");
  }
  return request;
}

struct RunManager::Entry {
  RunRequest request;
  ValidatedGraph graph;
  WorkerRegistry workers;
  std::shared_ptr<RunHandle> handle;
  std::unique_ptr<SliceClock> clock;
  std::unique_ptr<Director> director;
  bool wall = false;
  mutable std::mutex mu;
  mutable std::condition_variable cv;
  bool done = false;
  std::optional<RunResult> result;
  std::optional<std::string> error;
  std::jthread thread;
};

RunManager::RunManager(ManagerOptions options)
    : options_(std::move(options)), store_(options_.data_dir) {}

RunManager::~RunManager() { shutdown(); }

std::string RunManager::create(RunRequest request) {
  auto entry = std::make_shared<Entry>();
  entry->graph = validate_pipeline(request.pipeline);
  entry->workers = WorkerRegistry::mock_crew(entry->graph);
  auto source = scripted_feedback_source(request.feedback_trace, request.policy, entry->graph);
  entry->wall = !request.virtual_clock;
  if (entry->wall) {
    WallClockOptions clock_options;
    clock_options.tick_ms = request.tick_ms.value_or(options_.tick_ms);
    clock_options.review_window = request.review_window_ms
                                      ? std::chrono::milliseconds(*request.review_window_ms)
                                      : options_.review_window;
    entry->clock = std::make_unique<WallSliceClock>(clock_options);
  } else {
    entry->clock = std::make_unique<VirtualSliceClock>();
  }
  entry->handle = store_.create(RunMeta{"", request.pipeline.name, request.seed});
  entry->handle->save_pipeline(request.pipeline);
  entry->director = std::make_unique<Director>(entry->graph, entry->workers, *entry->clock,
                                               *entry->handle,
                                               RunOptions{request.mode, request.seed});
  entry->request = std::move(request);
  const auto run_id = entry->handle->meta().run_id;
  {
    std::lock_guard lock(mu_);
    runs_.emplace(run_id, entry);
  }
  entry->thread = std::jthread([entry, source = std::move(source)]() mutable {
    std::optional<RunResult> result;
    std::optional<std::string> error;
    try {
      result = entry->director->run(std::move(source));
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(entry->mu);
    entry->result = std::move(result);
    entry->error = std::move(error);
    entry->done = true;
    entry->cv.notify_all();
  });
  return run_id;
}

std::shared_ptr<RunManager::Entry> RunManager::entry(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(ErrorCode::kNotFound, "no run '" + run_id + "'");
  return it->second;
}

RunState RunManager::get(const std::string& run_id) const { return entry(run_id)->handle->state(); }

std::vector<RunState> RunManager::list() const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, e] : runs_) entries.push_back(e);
  }
  std::vector<RunState> out;
  for (const auto& e : entries) out.push_back(e->handle->state());
  return out;
}

std::shared_ptr<RunHandle> RunManager::handle(const std::string& run_id) const {
  return entry(run_id)->handle;
}

const ValidatedGraph& RunManager::graph(const std::string& run_id) const {
  return entry(run_id)->graph;
}

std::string RunManager::submit_feedback(const std::string& run_id, Feedback feedback) {
  auto e = entry(run_id);
  if (!e->wall) {
    throw Error(ErrorCode::kRunClosed,
                "run " + run_id + " uses the virtual clock and takes feedback only from its trace");
  }
  return e->director->submit_feedback(std::move(feedback));
}

std::optional<RunResult> RunManager::result(const std::string& run_id) const {
  auto e = entry(run_id);
  std::lock_guard lock(e->mu);
  return e->result;
}

void RunManager::wait(const std::string& run_id) const {
  auto e = entry(run_id);
  std::unique_lock lock(e->mu);
  e->cv.wait(lock, [&] { return e->done; });
}

void RunManager::shutdown() {
  std::map<std::string, std::shared_ptr<Entry>> runs;
  {
    std::lock_guard lock(mu_);
    runs = runs_;
  }
  for (auto& [id, e] : runs) {
    if (e->wall) e->clock->shutdown();
  }
  for (auto& [id, e] : runs) {
    if (e->thread.joinable()) e->thread.join();
  }
}

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownId:
      return 404;
    case ErrorCode::kRunClosed:
    case ErrorCode::kTargetPending:
      return 409;
    case ErrorCode::kCycle:
    case ErrorCode::kUnknownDependency:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kInvalidPipeline:
    case ErrorCode::kMissingDuration:
    case ErrorCode::kInvalidFeedback:
    case ErrorCode::kUnknownTarget:
    case ErrorCode::kTraceTriggerUnknown:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kBadRequest:
      return 400;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  nlohmann::json err = {{"code", to_string(e.code())}, {"message", e.what()}};
  if (const auto* cycle = dynamic_cast<const CycleError*>(&e)) err["cycle"] = cycle->cycle();
  send_json(res, status_for(e.code()), {{"error", err}});
}

template <typename F>
auto guarded(F handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, Error(ErrorCode::kBadRequest, e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
    }
  };
}

std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return std::stoull(req.get_param_value(key));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kBadRequest, std::string("bad query parameter '") + key + "'");
  }
}

nlohmann::json summary(const RunState& s) {
  return {{"run_id", s.run_id},
          {"pipeline", s.pipeline},
          {"seed", s.seed},
          {"status", to_string(s.status)},
          {"slice_count", s.slice_count()},
          {"time", s.latest_report.time}};
}

// A log record plus what a viewer needs to redraw after it: the events
// ready but not yet enqueued, and the Gantt row the record touched.
nlohmann::json stream_event(const EventLogRecord& record, const LogFolder& folder,
                            const ValidatedGraph& graph,
                            std::span<const EventLogRecord> prefix) {
  nlohmann::json out = record;
  const auto& state = folder.state();
  auto ready = ready_set(graph, state.latest_report);
  for (const auto& id : state.pending_decision.enqueue) ready.erase(id);
  for (const auto& id : state.pending_decision.revoke) ready.erase(id);
  out["ready"] = ready;
  out["slice_count"] = state.slice_count();
  out["status"] = to_string(state.status);
  if (record.event_id && (record.kind == RecordKind::kStart || record.kind == RecordKind::kComplete ||
                          record.kind == RecordKind::kRevoke)) {
    const auto rows = gantt_rows(prefix);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      if (it->event == *record.event_id) {
        out["gantt"] = *it;
        break;
      }
    }
  }
  return out;
}

}  // namespace

class Service::Impl {
 public:
  httplib::Server server;
  std::atomic<bool> stopping{false};
};

Service::Service(ServiceOptions options)
    : options_(std::move(options)), manager_(options_.manager), impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  auto& manager = manager_;
  auto* impl = impl_.get();
  server.new_task_queue = [] { return new httplib::ThreadPool(32); };
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Post("/runs", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    auto id = manager.create(parse_run_request(body));
    send_json(res, 201, {{"run_id", id}, {"status", "running"}});
  }));

  server.Get("/runs", guarded([&manager](const httplib::Request&, httplib::Response& res) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : manager.list()) runs.push_back(summary(s));
    send_json(res, 200, {{"runs", runs}});
  }));

  server.Get(R"(/runs/([^/]+))",
             guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, manager.get(req.matches[1]));
             }));

  server.Get(R"(/runs/([^/]+)/log)",
             guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               auto handle = manager.handle(req.matches[1]);
               const auto from = query_u64(req, "from_seq", 0);
               const auto limit = query_u64(req, "limit", 1000);
               auto records = handle->log().read(from, static_cast<std::size_t>(limit));
               send_json(res, 200,
                         {{"records", records},
                          {"next_seq", from + records.size()},
                          {"closed", handle->log().closed()}});
             }));

  server.Get(R"(/runs/([^/]+)/gantt)",
             guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               auto handle = manager.handle(req.matches[1]);
               const auto records = handle->log().read(0);
               send_json(res, 200, {{"rows", gantt_rows(records)}});
             }));

  server.Get(R"(/runs/([^/]+)/artifacts/([^/]+))",
             guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               auto handle = manager.handle(req.matches[1]);
               const std::string artifact_id = req.matches[2];
               auto artifact = handle->artifact(artifact_id);
               if (!artifact) {
                 throw Error(ErrorCode::kNotFound, "no artifact '" + artifact_id + "'");
               }
               if (req.has_param("raw") && req.get_param_value("raw") != "0") {
                 res.set_header("X-Content-Hash", artifact->content_hash);
                 res.set_content(artifact->content, "application/octet-stream");
                 return;
               }
               send_json(res, 200,
                         {{"artifact_id", artifact->id},
                          {"event", artifact->event},
                          {"attempt", artifact->attempt},
                          {"kind", to_string(artifact->kind)},
                          {"content_hash", artifact->content_hash},
                          {"content", artifact->content}});
             }));

  server.Post(R"(/runs/([^/]+)/feedback)",
              guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                auto feedback = nlohmann::json::parse(req.body).get<Feedback>();
                auto id = manager.submit_feedback(req.matches[1], std::move(feedback));
                send_json(res, 202, {{"feedback_id", id}});
              }));

  server.Get(R"(/runs/([^/]+)/stream)", guarded([&manager, impl](const httplib::Request& req,
                                                                   httplib::Response& res) {
    const std::string run_id = req.matches[1];
    auto handle = manager.handle(run_id);
    const auto& graph = manager.graph(run_id);
    const auto from = query_u64(req, "from_seq", 0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [handle, &graph, from, impl](std::size_t, httplib::DataSink& sink) {
          LogFolder folder(handle->meta());
          std::vector<EventLogRecord> seen;
          std::uint64_t next = 0;
          while (!impl->stopping) {
            for (auto& record : handle->log().read(next)) {
              folder.apply(record);
              seen.push_back(record);
              next = record.seq + 1;
              if (record.seq < from) continue;
              const auto line = "id: " + std::to_string(record.seq) + "\nevent: record\ndata: " +
                                stream_event(record, folder, graph, seen).dump() + "\n\n";
              if (!sink.write(line.data(), line.size())) return false;
            }
            if (handle->log().closed() && next >= handle->log().next_seq()) {
              const std::string end = "event: end\ndata: {}\n\n";
              sink.write(end.data(), end.size());
              sink.done();
              return true;
            }
            if (!sink.is_writable()) return false;
            handle->log().wait_for(next, std::chrono::milliseconds(200));
          }
          sink.done();
          return true;
        });
  }));
}

Service::~Service() { stop(); }

void Service::start() {
  auto& server = impl_->server;
  if (options_.port == 0) {
    port_ = server.bind_to_any_port(options_.host);
    if (port_ < 0) throw Error(ErrorCode::kIo, "cannot bind " + options_.host);
  } else if (server.bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  } else {
    throw Error(ErrorCode::kIo, "cannot bind " + options_.host + ":" +
                                    std::to_string(options_.port) + " (address in use?)");
  }
  thread_ = std::jthread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
}

void Service::wait() {
  if (thread_.joinable()) thread_.join();
}

void Service::serve_forever() {
  start();
  wait();
}

void Service::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  manager_.shutdown();
}

}  // namespace filmflow
