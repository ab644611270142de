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

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/feedback.hpp"
#include "filmflow/graph.hpp"
#include "filmflow/scheduler.hpp"
#include "filmflow/store.hpp"

namespace filmflow {

struct RunRequest {
  PipelineDef pipeline;
  SchedulingMode mode = SchedulingMode::kParallel;
  std::uint64_t seed = kDefaultSeed;
  bool virtual_clock = true;
  FeedbackTrace feedback_trace;
  FrequencyPolicy policy = FrequencyPolicy::no_limits();
  std::optional<int> tick_ms;
  std::optional<std::int64_t> review_window_ms;
};

// {pipeline: <PipelineDef> | "film", mode?, seed?, clock?: "virtual"|"wall",
//  feedback_trace?, policy?, tick_ms?, review_window_ms?}
// Throws BadRequest, or the validation error of the pipeline.
RunRequest parse_run_request(const nlohmann::json& body);

struct ManagerOptions {
  std::optional<std::filesystem::path> data_dir;
  int tick_ms = 10;
  std::chrono::milliseconds review_window{1000};
};

// Owns every run of the service: one planning loop thread per run.
class RunManager {
 public:
  explicit RunManager(ManagerOptions options = {});
  ~RunManager();

  RunManager(const RunManager&) = delete;
  RunManager& operator=(const RunManager&) = delete;

  // Validates the pipeline and starts the loop; returns the run id at once.
  std::string create(RunRequest request);
  RunState get(const std::string& run_id) const;  // NotFound
  std::vector<RunState> list() const;
  std::shared_ptr<RunHandle> handle(const std::string& run_id) const;
  const ValidatedGraph& graph(const std::string& run_id) const;
  // RunClosed for finished runs and for virtual-clock runs.
  std::string submit_feedback(const std::string& run_id, Feedback feedback);
  std::optional<RunResult> result(const std::string& run_id) const;
  // Blocks until the run loop returns.
  void wait(const std::string& run_id) const;
  void shutdown();

 private:
  struct Entry;

  std::shared_ptr<Entry> entry(const std::string& run_id) const;

  ManagerOptions options_;
  RunStore store_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> runs_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  ManagerOptions manager;
};

// HTTP front end:
//   POST /runs                          create -> {run_id, status}
//   GET  /runs                          summaries
//   GET  /runs/{id}                     RunState
//   GET  /runs/{id}/log?from_seq&limit  page of records
//   GET  /runs/{id}/stream?from_seq     text/event-stream, one record per event
//   POST /runs/{id}/feedback            -> {feedback_id}
//   GET  /runs/{id}/artifacts/{aid}     {artifact_id, content_hash, kind, content}
//                                       (?raw=1 returns the bytes verbatim)
//   GET  /runs/{id}/gantt               rows
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Throws Io if the address is
  // unavailable.
  void start();
  // Blocks until the server thread exits.
  void wait();
  // start() then wait().
  void serve_forever();
  void stop();
  int port() const { return port_; }
  RunManager& manager() { return manager_; }

 private:
  class Impl;

  ServiceOptions options_;
  RunManager manager_;
  std::unique_ptr<Impl> impl_;
  std::jthread thread_;
  int port_ = 0;
};

}  // namespace filmflow
