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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <stop_token>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "filmflow/crew.hpp"
#include "filmflow/feedback.hpp"
#include "filmflow/graph.hpp"
#include "filmflow/progress.hpp"
#include "filmflow/simulation.hpp"
#include "filmflow/store.hpp"

namespace filmflow {

enum class SchedulingMode { kParallel, kSerial };

std::string_view to_string(SchedulingMode mode);
SchedulingMode scheduling_mode_from_string(std::string_view name);

// One planning step at a slice boundary.
//
// Without feedback: revoke nothing, enqueue the ready set. With feedback:
// revoke what the interpreter returns and enqueue the ready set of the
// post-revocation report, minus the revoked events themselves (they become
// eligible at the next boundary). Serial mode enqueues at most one event,
// the first ready one in topological order, and only while nothing runs.
// `wait` is set iff nothing is enqueued or revoked and events remain.
ScheduleDecision plan(const ProgressReport& report,
                      const std::optional<Feedback>& feedback,
                      const ValidatedGraph& graph,
                      SchedulingMode mode = SchedulingMode::kParallel);

ScheduleDecision plan_with(const ProgressReport& report,
                           const RevocationPlan* revocation,
                           const ValidatedGraph& graph, SchedulingMode mode);

enum class BoundaryCause { kStart, kCompletion, kFeedback, kRequeue };

struct Boundary {
  BoundaryCause cause = BoundaryCause::kStart;
  Ticks time = 0;
  std::optional<Completion> completion;
  std::optional<Artifact> artifact;  // with a successful completion
  std::optional<Feedback> feedback;
};

struct Dispatch {
  EventSpec event;  // params already carry feedback overlays
  int attempt = 1;
  int try_index = 0;
  Ticks duration = 0;
  std::uint64_t seed = kDefaultSeed;
  InputArtifacts inputs;
  const Worker* worker = nullptr;
};

// Source of slice boundaries and owner of running executions.
class SliceClock {
 public:
  virtual ~SliceClock() = default;

  virtual Ticks now() const = 0;
  // Called once as a run starts; returns the run's origin.
  virtual Ticks begin() { return now(); }
  virtual void dispatch(Dispatch job) = 0;
  // Cancels a running execution and waits for the worker to acknowledge.
  // A completion of that execution that is already queued is discarded.
  virtual void cancel(const EventId& id, int attempt) = 0;
  // `at` is clock time; see scale().
  virtual void schedule_feedback(Ticks at, Feedback feedback) = 0;
  // Clock time spanned by `units` duration units.
  virtual Ticks scale(Ticks units) const { return units; }
  // Feedback arriving now. Throws RunClosed once the run has finished.
  virtual void submit_feedback(Feedback feedback) = 0;
  // Forces a boundary right after the current one.
  virtual void request_requeue() = 0;
  // Feedback is queued for the current instant. The loop then holds its
  // enqueues for the feedback boundary, so a review released by a completion
  // is seen before that completion's dependents start.
  virtual bool feedback_due() const = 0;
  // Blocks until the next boundary. `run_complete` means every event is done
  // and only pending or review-window feedback can reopen the run. Returns
  // nullopt when no further boundary can occur; the clock then refuses
  // feedback.
  virtual std::optional<Boundary> next_boundary(bool run_complete) = 0;
  virtual void shutdown() = 0;
  virtual bool accepts_live_feedback() const = 0;
};

// Discrete-event clock; workers run inline at dispatch and their completions
// fire at dispatch time + duration.
class VirtualSliceClock final : public SliceClock {
 public:
  Ticks now() const override { return clock_.now(); }
  void dispatch(Dispatch job) override;
  void cancel(const EventId& id, int attempt) override;
  void schedule_feedback(Ticks at, Feedback feedback) override;
  void submit_feedback(Feedback feedback) override;
  void request_requeue() override;
  bool feedback_due() const override;
  std::optional<Boundary> next_boundary(bool run_complete) override;
  void shutdown() override;
  bool accepts_live_feedback() const override { return false; }

 private:
  struct Pending {
    std::optional<Completion> completion;
    std::optional<Artifact> artifact;
    std::optional<Feedback> feedback;
  };

  VirtualClock clock_;
  std::uint64_t next_token_ = 0;
  std::map<std::uint64_t, Pending> pending_;
  std::map<std::pair<EventId, int>, OccurrenceId> running_;
};

struct WallClockOptions {
  int tick_ms = 10;  // wall milliseconds per duration unit
  std::chrono::milliseconds review_window{0};
};

// Real threads. Times are milliseconds since construction and one duration
// unit lasts tick_ms. Messages are handled in (time, kind, key) order.
class WallSliceClock final : public SliceClock {
 public:
  explicit WallSliceClock(WallClockOptions options = {});
  ~WallSliceClock() override;

  WallSliceClock(const WallSliceClock&) = delete;
  WallSliceClock& operator=(const WallSliceClock&) = delete;

  Ticks now() const override;
  Ticks begin() override;
  void dispatch(Dispatch job) override;
  void cancel(const EventId& id, int attempt) override;
  void schedule_feedback(Ticks at, Feedback feedback) override;
  Ticks scale(Ticks units) const override { return units * options_.tick_ms; }
  void submit_feedback(Feedback feedback) override;
  void request_requeue() override;
  bool feedback_due() const override;
  std::optional<Boundary> next_boundary(bool run_complete) override;
  void shutdown() override;
  bool accepts_live_feedback() const override { return true; }

 private:
  struct Message {
    Ticks time = 0;
    OccurrenceKind kind = OccurrenceKind::kCompletion;
    std::string key;
    std::uint64_t order = 0;
    Boundary boundary;
  };
  struct Later {
    bool operator()(const Message& a, const Message& b) const {
      return std::tie(a.time, a.kind, a.key, a.order) >
             std::tie(b.time, b.kind, b.key, b.order);
    }
  };
  struct Execution {
    std::stop_source stop;
    std::jthread thread;
  };

  void push_locked(Message message);
  void reap(const std::pair<EventId, int>& key);

  WallClockOptions options_;
  WallPacer pacer_;
  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::priority_queue<Message, std::vector<Message>, Later> queue_;
  std::map<std::pair<EventId, int>, std::unique_ptr<Execution>> executions_;
  std::uint64_t order_ = 0;
  Ticks last_boundary_ = 0;
  bool accepting_ = true;
};

struct RunOptions {
  SchedulingMode mode = SchedulingMode::kParallel;
  std::uint64_t seed = kDefaultSeed;
  int retry_budget = 3;  // tries per attempt before the event fails the run
};

struct RunResult {
  RunStatus status = RunStatus::kRunning;
  ProgressReport final_report;
  Ticks makespan = 0;
  std::int64_t slice_count = 0;
  std::string event_log_ref;
  std::map<EventId, Artifact> final_artifacts;  // artifact of each done event
  std::optional<std::string> failure;
};

// The planning loop for one run: plan, dispatch, await the next boundary,
// advance, until every event is done and no feedback is outstanding. It is
// the only writer of the run's log.
class Director {
 public:
  Director(const ValidatedGraph& graph, const WorkerRegistry& workers,
           SliceClock& clock, RunHandle& run, RunOptions options = {},
           const FeedbackInterpreter* interpreter = nullptr);

  // Throws Deadlock if the loop stalls with events remaining; worker
  // failures beyond the retry budget end the run with status failed.
  RunResult run(ScriptedFeedbackSource feedback = {});

  // Safe to call from any thread. Validates against the latest folded
  // report, assigns "live-<n>" when the id is empty and queues the feedback
  // on the clock. Throws UnknownTarget, TargetPending, InvalidFeedback or
  // RunClosed.
  std::string submit_feedback(Feedback feedback);

 private:
  void log(RecordKind kind, std::optional<EventId> id, std::optional<int> attempt,
           nlohmann::json payload);
  void dispatch(const EventId& id);
  RunResult finish(RunStatus status, std::optional<std::string> failure);

  const ValidatedGraph& graph_;
  const WorkerRegistry& workers_;
  SliceClock& clock_;
  RunHandle& run_;
  RunOptions options_;
  StructuredInterpreter structured_;
  const FeedbackInterpreter* interpreter_;

  ProgressReport report_;
  ScheduleDecision decision_;
  std::map<std::string, Artifact> artifacts_;
  Ticks origin_ = 0;

  std::mutex submit_mu_;
  std::uint64_t live_counter_ = 0;
};

// Runs a whole pipeline on a fresh virtual clock. When `handle` is null an
// in-memory run is used.
RunResult run_virtual(const ValidatedGraph& graph, const WorkerRegistry& workers,
                      ScriptedFeedbackSource feedback, RunOptions options = {},
                      RunHandle* handle = nullptr);

}  // namespace filmflow
