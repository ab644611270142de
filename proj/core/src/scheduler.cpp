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

#include "filmflow/scheduler.hpp"

#include <algorithm>

#include "filmflow/error.hpp"

namespace filmflow {

std::string_view to_string(SchedulingMode mode) {
  return mode == SchedulingMode::kSerial ? "serial" : "parallel";
}

SchedulingMode scheduling_mode_from_string(std::string_view name) {
  if (name == "parallel") return SchedulingMode::kParallel;
  if (name == "serial") return SchedulingMode::kSerial;
  throw Error(ErrorCode::kBadRequest, "unknown mode '" + std::string(name) + "'");
}

namespace {

void check_consistent(const ProgressReport& report, const ValidatedGraph& graph) {
  auto known = [&](const EventId& id) {
    if (!graph.contains(id)) {
      throw Error(ErrorCode::kInconsistentReport, "report references unknown event '" + id + "'");
    }
  };
  for (const auto& [id, e] : report.running) known(id);
  for (const auto& [id, e] : report.done) {
    known(id);
    if (report.running.contains(id)) {
      throw Error(ErrorCode::kInconsistentReport, "'" + id + "' is both running and done");
    }
  }
  for (const auto& id : report.failed) known(id);
  for (const auto& [id, p] : report.overlays) known(id);
}

}  // namespace

ScheduleDecision plan_with(const ProgressReport& report, const RevocationPlan* revocation,
                           const ValidatedGraph& graph, SchedulingMode mode) {
  check_consistent(report, graph);
  ScheduleDecision decision;
  ProgressReport view = report;
  if (revocation != nullptr && !revocation->empty()) {
    decision.revoke = revocation->revocations;
    decision.reason = revocation->reason;
    decision.amendments = revocation->amendments_by_event;
    for (const auto& id : decision.revoke) {
      if (view.running.erase(id) == 0 && view.done.erase(id) == 0) {
        throw Error(ErrorCode::kInvalidDecision, "cannot revoke '" + id + "': not started");
      }
    }
  }
  auto ready = ready_set(graph, view);
  std::erase_if(ready, [&](const EventId& id) { return decision.revoke.contains(id); });
  if (mode == SchedulingMode::kParallel) {
    decision.enqueue = std::move(ready);
  } else if (view.running.empty() && !ready.empty()) {
    decision.enqueue.insert(*std::min_element(
        ready.begin(), ready.end(), [&](const EventId& a, const EventId& b) {
          return graph.topo_position(a) < graph.topo_position(b);
        }));
  }
  decision.wait = decision.empty() && !is_complete(graph, view);
  return decision;
}

ScheduleDecision plan(const ProgressReport& report, const std::optional<Feedback>& feedback,
                      const ValidatedGraph& graph, SchedulingMode mode) {
  if (!feedback) return plan_with(report, nullptr, graph, mode);
  check_consistent(report, graph);
  const auto revocation = interpret(*feedback, report, graph);
  return plan_with(report, &revocation, graph, mode);
}

namespace {

Completion failed_completion(const Dispatch& job, Ticks at, std::string error) {
  Completion c;
  c.id = job.event.id;
  c.attempt = job.attempt;
  c.time = at;
  c.error = std::move(error);
  return c;
}

Boundary run_inline(const Dispatch& job, Ticks at, std::stop_token cancel, const Pacer& pacer) {
  Boundary b;
  b.cause = BoundaryCause::kCompletion;
  b.time = at;
  ExecContext ctx{job.seed, job.attempt, job.try_index, job.duration, std::move(cancel), &pacer};
  try {
    auto artifact = job.worker->execute(job.event, job.inputs, ctx);
    Completion c;
    c.id = job.event.id;
    c.attempt = job.attempt;
    c.time = at;
    c.artifact_id = artifact.id;
    c.content_hash = artifact.content_hash;
    b.completion = std::move(c);
    b.artifact = std::move(artifact);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCancelled) throw;
    b.completion = failed_completion(job, at, e.what());
  } catch (const std::exception& e) {
    b.completion = failed_completion(job, at, e.what());
  }
  return b;
}

}  // namespace

void VirtualSliceClock::dispatch(Dispatch job) {
  static const VirtualPacer kPacer;
  if (job.duration < 0) throw Error(ErrorCode::kInvalidParams, "negative duration");
  const Ticks at = clock_.now() + job.duration;
  Boundary b = run_inline(job, at, {}, kPacer);
  const auto token = next_token_++;
  const auto occurrence = clock_.schedule(at, {OccurrenceKind::kCompletion, job.event.id, token});
  pending_.emplace(token, Pending{std::move(b.completion), std::move(b.artifact), std::nullopt});
  running_[{job.event.id, job.attempt}] = occurrence;
}

void VirtualSliceClock::cancel(const EventId& id, int attempt) {
  auto it = running_.find({id, attempt});
  if (it == running_.end()) return;
  clock_.cancel(it->second);
  running_.erase(it);
  std::erase_if(pending_, [&](const auto& entry) {
    const auto& c = entry.second.completion;
    return c && c->id == id && c->attempt == attempt;
  });
}

void VirtualSliceClock::schedule_feedback(Ticks at, Feedback feedback) {
  const auto token = next_token_++;
  auto key = feedback.id;
  feedback.arrival_time = at;
  clock_.schedule(at, {OccurrenceKind::kFeedback, std::move(key), token});
  pending_.emplace(token, Pending{std::nullopt, std::nullopt, std::move(feedback)});
}

void VirtualSliceClock::submit_feedback(Feedback /*feedback*/) {
  throw Error(ErrorCode::kBadRequest, "virtual runs take feedback only from their trace");
}

void VirtualSliceClock::request_requeue() {
  clock_.schedule(clock_.now(), {OccurrenceKind::kRequeue, {}, next_token_++});
}

bool VirtualSliceClock::feedback_due() const {
  return clock_.has_pending(clock_.now(), OccurrenceKind::kFeedback);
}

std::optional<Boundary> VirtualSliceClock::next_boundary(bool /*run_complete*/) {
  auto fired = clock_.next();
  if (!fired) return std::nullopt;
  Boundary b;
  b.time = fired->time;
  switch (fired->occurrence.kind) {
    case OccurrenceKind::kRequeue:
      b.cause = BoundaryCause::kRequeue;
      return b;
    case OccurrenceKind::kCompletion:
      b.cause = BoundaryCause::kCompletion;
      break;
    case OccurrenceKind::kFeedback:
      b.cause = BoundaryCause::kFeedback;
      break;
  }
  auto node = pending_.extract(fired->occurrence.token);
  auto& p = node.mapped();
  b.completion = std::move(p.completion);
  b.artifact = std::move(p.artifact);
  b.feedback = std::move(p.feedback);
  if (b.completion) running_.erase({b.completion->id, b.completion->attempt});
  return b;
}

void VirtualSliceClock::shutdown() {
  for (const auto& [key, occurrence] : running_) clock_.cancel(occurrence);
  running_.clear();
  std::erase_if(pending_, [](const auto& entry) { return entry.second.completion.has_value(); });
}

WallSliceClock::WallSliceClock(WallClockOptions options)
    : options_(options),
      pacer_(std::max(options.tick_ms, 0)),
      origin_(std::chrono::steady_clock::now()) {}

WallSliceClock::~WallSliceClock() { shutdown(); }

Ticks WallSliceClock::now() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(steady_clock::now() - origin_).count();
}

Ticks WallSliceClock::begin() {
  std::lock_guard lock(mu_);
  if (!queue_.empty() || !executions_.empty()) return now();
  origin_ = std::chrono::steady_clock::now();
  return 0;
}

void WallSliceClock::push_locked(Message message) {
  message.order = order_++;
  queue_.push(std::move(message));
  cv_.notify_all();
}

void WallSliceClock::dispatch(Dispatch job) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(job.event.id, job.attempt);
  auto execution = std::make_unique<Execution>();
  auto token = execution->stop.get_token();
  execution->thread = std::jthread([this, job = std::move(job), token] {
    try {
      Boundary b = run_inline(job, 0, token, pacer_);
      std::lock_guard inner(mu_);
      if (token.stop_requested()) return;
      b.time = now();
      b.completion->time = b.time;
      push_locked({b.time, OccurrenceKind::kCompletion, job.event.id, 0, std::move(b)});
    } catch (const Error&) {
      // Cancelled: the canceller joins this thread and drops any result.
    }
  });
  executions_[key] = std::move(execution);
}

void WallSliceClock::reap(const std::pair<EventId, int>& key) {
  std::unique_ptr<Execution> execution;
  {
    std::lock_guard lock(mu_);
    auto it = executions_.find(key);
    if (it == executions_.end()) return;
    execution = std::move(it->second);
    executions_.erase(it);
  }
  execution->thread.join();
}

void WallSliceClock::cancel(const EventId& id, int attempt) {
  const auto key = std::make_pair(id, attempt);
  auto drop_queued = [&] {
    std::vector<Message> kept;
    while (!queue_.empty()) {
      auto m = queue_.top();
      queue_.pop();
      const auto& c = m.boundary.completion;
      if (!(c && c->id == id && c->attempt == attempt)) kept.push_back(std::move(m));
    }
    for (auto& m : kept) queue_.push(std::move(m));
  };
  std::unique_ptr<Execution> execution;
  {
    std::lock_guard lock(mu_);
    auto it = executions_.find(key);
    if (it != executions_.end()) {
      execution = std::move(it->second);
      executions_.erase(it);
    }
    drop_queued();
  }
  if (!execution) return;
  execution->stop.request_stop();
  execution->thread.join();
  std::lock_guard lock(mu_);
  drop_queued();
}

void WallSliceClock::schedule_feedback(Ticks at, Feedback feedback) {
  std::lock_guard lock(mu_);
  Boundary b;
  b.cause = BoundaryCause::kFeedback;
  b.time = at;
  feedback.arrival_time = b.time;
  auto key = feedback.id;
  b.feedback = std::move(feedback);
  push_locked({b.time, OccurrenceKind::kFeedback, std::move(key), 0, std::move(b)});
}

void WallSliceClock::submit_feedback(Feedback feedback) {
  std::lock_guard lock(mu_);
  if (!accepting_) throw Error(ErrorCode::kRunClosed, "run is closed to feedback");
  Boundary b;
  b.cause = BoundaryCause::kFeedback;
  b.time = std::max(now(), last_boundary_);
  feedback.arrival_time = b.time;
  auto key = feedback.id;
  b.feedback = std::move(feedback);
  push_locked({b.time, OccurrenceKind::kFeedback, std::move(key), 0, std::move(b)});
}

void WallSliceClock::request_requeue() {
  std::lock_guard lock(mu_);
  Boundary b;
  b.cause = BoundaryCause::kRequeue;
  b.time = last_boundary_;
  push_locked({b.time, OccurrenceKind::kRequeue, {}, 0, std::move(b)});
}

bool WallSliceClock::feedback_due() const {
  std::lock_guard lock(mu_);
  return !queue_.empty() && queue_.top().kind == OccurrenceKind::kFeedback &&
         queue_.top().time <= std::max(now(), last_boundary_);
}

std::optional<Boundary> WallSliceClock::next_boundary(bool run_complete) {
  using namespace std::chrono;
  const auto review_deadline = steady_clock::now() + options_.review_window;
  std::unique_lock lock(mu_);
  while (true) {
    if (!queue_.empty()) {
      const auto& top = queue_.top();
      const Ticks current = now();
      if (top.time <= current) {
        Message m = queue_.top();
        queue_.pop();
        last_boundary_ = std::max(last_boundary_, m.time);
        m.boundary.time = last_boundary_;
        if (m.boundary.completion) {
          m.boundary.completion->time = last_boundary_;
          auto key = std::make_pair(m.boundary.completion->id, m.boundary.completion->attempt);
          lock.unlock();
          reap(key);
        }
        return std::move(m.boundary);
      }
      cv_.wait_until(lock, origin_ + milliseconds(top.time));
      continue;
    }
    if (run_complete) {
      if (steady_clock::now() >= review_deadline) {
        accepting_ = false;
        return std::nullopt;
      }
      cv_.wait_until(lock, review_deadline);
      continue;
    }
    if (executions_.empty()) {
      accepting_ = false;
      return std::nullopt;
    }
    cv_.wait(lock);
  }
}

void WallSliceClock::shutdown() {
  std::map<std::pair<EventId, int>, std::unique_ptr<Execution>> executions;
  {
    std::lock_guard lock(mu_);
    accepting_ = false;
    executions.swap(executions_);
  }
  for (auto& [key, execution] : executions) execution->stop.request_stop();
  for (auto& [key, execution] : executions) {
    if (execution->thread.joinable()) execution->thread.join();
  }
  std::lock_guard lock(mu_);
  queue_ = {};
}

Director::Director(const ValidatedGraph& graph, const WorkerRegistry& workers, SliceClock& clock,
                   RunHandle& run, RunOptions options, const FeedbackInterpreter* interpreter)
    : graph_(graph),
      workers_(workers),
      clock_(clock),
      run_(run),
      options_(options),
      interpreter_(interpreter != nullptr ? interpreter : &structured_) {
  if (options_.retry_budget < 1) {
    throw Error(ErrorCode::kInvalidParams, "retry budget must be at least 1");
  }
  for (const auto& e : graph_.events()) workers_.for_role(e.role);
}

void Director::log(RecordKind kind, std::optional<EventId> id, std::optional<int> attempt,
                   nlohmann::json payload) {
  EventLogRecord r;
  r.seq = run_.next_seq();
  r.time = report_.time;
  r.slice = report_.slice_index;
  r.kind = kind;
  r.event_id = std::move(id);
  r.attempt = attempt;
  r.payload = std::move(payload);
  run_.append(std::move(r));
}

void Director::dispatch(const EventId& id) {
  Dispatch job;
  job.event = graph_.event(id);
  if (auto it = report_.overlays.find(id); it != report_.overlays.end()) {
    for (const auto& [key, value] : it->second) job.event.params[key] = value;
  }
  job.attempt = report_.attempt_of(id);
  job.try_index = report_.failures.contains(id) ? report_.failures.at(id) : 0;
  job.seed = options_.seed;
  job.worker = &workers_.for_role(job.event.role);
  job.duration = job.worker->planned_duration(job.event, job.attempt, options_.seed);
  for (const auto& dep : job.event.dependencies) {
    job.inputs.emplace(dep, artifacts_.at(report_.done.at(dep).artifact_id));
  }
  log(RecordKind::kStart, id, job.attempt,
      {{"duration", job.duration}, {"try", job.try_index}});
  clock_.dispatch(std::move(job));
}

RunResult Director::run(ScriptedFeedbackSource feedback) {
  origin_ = clock_.begin();
  report_ = {};
  report_.time = origin_;
  decision_ = {};
  for (auto& [at, fb] : feedback.timed()) {
    clock_.schedule_feedback(origin_ + clock_.scale(at), std::move(fb));
  }

  auto decide = [&](const RevocationPlan* revocation) {
    decision_ = plan_with(report_, revocation, graph_, options_.mode);
    if (clock_.feedback_due() && !decision_.enqueue.empty()) {
      decision_.enqueue.clear();
      decision_.wait = decision_.empty();
    }
    for (const auto& id : decision_.revoke) {
      const bool running = report_.is_running(id);
      const int attempt =
          running ? report_.running.at(id).attempt : report_.done.at(id).attempt;
      if (running) clock_.cancel(id, attempt);
      nlohmann::json payload = {{"reason", decision_.reason}};
      if (auto it = decision_.amendments.find(id); it != decision_.amendments.end()) {
        payload["amendments"] = it->second;
      }
      log(RecordKind::kRevoke, id, attempt, std::move(payload));
    }
    for (const auto& id : decision_.enqueue) {
      log(RecordKind::kEnqueue, id, report_.attempt_of(id), nlohmann::json::object());
    }
    if (decision_.wait) log(RecordKind::kWait, std::nullopt, std::nullopt, nlohmann::json::object());
    for (const auto& id : decision_.enqueue) dispatch(id);
    if (!decision_.revoke.empty()) clock_.request_requeue();
  };

  decide(nullptr);
  while (true) {
    const bool complete = is_complete(graph_, report_) && decision_.enqueue.empty();
    auto boundary = clock_.next_boundary(complete);
    if (!boundary) {
      if (complete) return finish(RunStatus::kCompleted, std::nullopt);
      finish(RunStatus::kFailed, "deadlock");
      throw Error(ErrorCode::kDeadlock, "no event can make progress");
    }
    switch (boundary->cause) {
      case BoundaryCause::kCompletion: {
        auto completion = *boundary->completion;
        const int tries = report_.failures.contains(completion.id)
                              ? report_.failures.at(completion.id)
                              : 0;
        if (!completion.ok()) completion.exhausted = tries + 1 >= options_.retry_budget;
        report_ = advance(report_, decision_, std::span(&completion, 1), boundary->time);
        decision_ = {};
        nlohmann::json payload;
        if (completion.ok()) {
          const auto& artifact = *boundary->artifact;
          artifacts_.emplace(artifact.id, artifact);
          run_.put_artifact(artifact);
          payload = {{"artifact_id", artifact.id},
                     {"content_hash", artifact.content_hash},
                     {"kind", to_string(artifact.kind)}};
        } else {
          payload = {{"error", *completion.error}, {"exhausted", completion.exhausted}};
        }
        log(RecordKind::kComplete, completion.id, completion.attempt, std::move(payload));
        if (completion.exhausted) {
          return finish(RunStatus::kFailed,
                        "'" + completion.id + "' failed " + std::to_string(tries + 1) +
                            " times: " + *completion.error);
        }
        if (completion.ok()) {
          for (auto& fb : feedback.on_completion(completion.id)) {
            clock_.schedule_feedback(boundary->time, std::move(fb));
          }
        }
        decide(nullptr);
        break;
      }
      case BoundaryCause::kFeedback: {
        report_ = advance(report_, decision_, {}, boundary->time);
        decision_ = {};
        const auto& fb = *boundary->feedback;
        std::optional<RevocationPlan> revocation;
        nlohmann::json payload = {{"feedback", fb}};
        try {
          revocation = interpreter_->interpret(fb, report_, graph_);
          payload["status"] = "applied";
        } catch (const Error& e) {
          payload["status"] = "rejected";
          payload["error"] = e.what();
        }
        log(RecordKind::kFeedback, fb.target, std::nullopt, std::move(payload));
        decide(revocation ? &*revocation : nullptr);
        break;
      }
      case BoundaryCause::kRequeue:
      case BoundaryCause::kStart:
        report_ = advance(report_, decision_, {}, boundary->time);
        decision_ = {};
        decide(nullptr);
        break;
    }
  }
}

std::string Director::submit_feedback(Feedback feedback) {
  std::lock_guard lock(submit_mu_);
  if (!clock_.accepts_live_feedback()) {
    throw Error(ErrorCode::kBadRequest, "virtual runs take feedback only from their trace");
  }
  if (feedback.id.empty()) feedback.id = "live-" + std::to_string(++live_counter_);
  const auto state = run_.state();
  if (state.status != RunStatus::kRunning) {
    throw Error(ErrorCode::kRunClosed, "run " + run_.meta().run_id + " is closed");
  }
  interpret(feedback, state.latest_report, graph_);
  auto id = feedback.id;
  clock_.submit_feedback(std::move(feedback));
  return id;
}

RunResult Director::finish(RunStatus status, std::optional<std::string> failure) {
  clock_.shutdown();
  RunResult result;
  result.status = status;
  result.final_report = report_;
  Ticks last = report_.time;
  if (status == RunStatus::kCompleted) {
    last = origin_;
    for (const auto& [id, done] : report_.done) last = std::max(last, done.finish);
  }
  result.makespan = last - origin_;
  result.slice_count = report_.slice_index + 1;
  result.failure = failure;
  nlohmann::json payload = {{"status", to_string(status)},
                            {"makespan", result.makespan},
                            {"slice_count", result.slice_count}};
  if (failure) payload["failure"] = *failure;
  log(RecordKind::kFinish, std::nullopt, std::nullopt, std::move(payload));

  for (const auto& [id, done] : report_.done) {
    result.final_artifacts.emplace(id, artifacts_.at(done.artifact_id));
  }
  RunState state;
  state.run_id = run_.meta().run_id;
  state.pipeline = run_.meta().pipeline;
  state.seed = run_.meta().seed;
  state.status = status;
  state.latest_report = report_;
  state.pending_decision = decision_;
  for (const auto& [id, a] : artifacts_) {
    state.artifacts.emplace(id, ArtifactMeta{a.id, a.event, a.attempt, a.kind, a.content_hash});
  }
  if (state != run_.state()) {
    throw Error(ErrorCode::kCorruptLog, "log fold diverged from the scheduling loop");
  }
  run_.save_state(state);
  result.event_log_ref = run_.dir() ? (*run_.dir() / "log.ndjson").string()
                                    : "memory:" + run_.meta().run_id;
  return result;
}

RunResult run_virtual(const ValidatedGraph& graph, const WorkerRegistry& workers,
                      ScriptedFeedbackSource feedback, RunOptions options, RunHandle* handle) {
  std::optional<RunHandle> local;
  if (handle == nullptr) {
    local.emplace(RunMeta{"", graph.name(), options.seed}, std::nullopt);
    handle = &*local;
  }
  VirtualSliceClock clock;
  Director director(graph, workers, clock, *handle, options);
  return director.run(std::move(feedback));
}

}  // namespace filmflow
