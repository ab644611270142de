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

#include "filmflow/store.hpp"

#include <fstream>
#include <sstream>

#include "filmflow/error.hpp"

namespace filmflow {

namespace fs = std::filesystem;

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kRunning: return "running";
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kFailed: return "failed";
  }
  return "running";
}

RunStatus run_status_from_string(std::string_view name) {
  if (name == "running") return RunStatus::kRunning;
  if (name == "completed") return RunStatus::kCompleted;
  if (name == "failed") return RunStatus::kFailed;
  throw Error(ErrorCode::kCorruptLog, "unknown run status '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const RunState& s) {
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& [id, m] : s.artifacts) {
    artifacts[id] = {{"event", m.event},
                     {"attempt", m.attempt},
                     {"kind", to_string(m.kind)},
                     {"content_hash", m.content_hash}};
  }
  j = {{"run_id", s.run_id},
       {"pipeline", s.pipeline},
       {"seed", s.seed},
       {"status", to_string(s.status)},
       {"latest_report", s.latest_report},
       {"pending_decision", s.pending_decision},
       {"artifacts", artifacts}};
}

void from_json(const nlohmann::json& j, RunState& s) {
  s = {};
  s.run_id = j.at("run_id").get<std::string>();
  s.pipeline = j.at("pipeline").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.status = run_status_from_string(j.at("status").get<std::string>());
  s.latest_report = j.at("latest_report").get<ProgressReport>();
  s.pending_decision = j.at("pending_decision").get<ScheduleDecision>();
  for (const auto& [id, m] : j.at("artifacts").items()) {
    s.artifacts.emplace(id, ArtifactMeta{id, m.at("event").get<std::string>(),
                                         m.at("attempt").get<int>(),
                                         artifact_kind_from_string(m.at("kind").get<std::string>()),
                                         m.at("content_hash").get<std::string>()});
  }
}

LogFolder::LogFolder(RunMeta meta) {
  state_.run_id = std::move(meta.run_id);
  state_.pipeline = std::move(meta.pipeline);
  state_.seed = meta.seed;
}

namespace {

[[noreturn]] void corrupt(const EventLogRecord& r, const std::string& what) {
  throw Error(ErrorCode::kCorruptLog, "record " + std::to_string(r.seq) + " (" +
                                          std::string(to_string(r.kind)) + "): " + what);
}

const EventId& require_event(const EventLogRecord& r) {
  if (!r.event_id) corrupt(r, "missing event id");
  return *r.event_id;
}

Completion completion_from(const EventLogRecord& r) {
  Completion c;
  c.id = require_event(r);
  if (!r.attempt) corrupt(r, "missing attempt");
  c.attempt = *r.attempt;
  c.time = r.time;
  if (r.payload.contains("error")) {
    c.error = r.payload.at("error").get<std::string>();
    c.exhausted = r.payload.value("exhausted", false);
  } else {
    c.artifact_id = r.payload.at("artifact_id").get<std::string>();
    c.content_hash = r.payload.at("content_hash").get<std::string>();
  }
  return c;
}

}  // namespace

void LogFolder::apply(const EventLogRecord& r) {
  if (r.seq != next_seq_) {
    corrupt(r, "expected seq " + std::to_string(next_seq_));
  }
  if (state_.status != RunStatus::kRunning) corrupt(r, "record after finish");

  RunState next = state_;
  std::set<EventId> started = started_;
  const auto& report = next.latest_report;
  try {
    if (r.slice == report.slice_index + 1) {
      if (r.time < report.time) corrupt(r, "time moves backwards");
      std::vector<Completion> completions;
      if (r.kind == RecordKind::kComplete) completions.push_back(completion_from(r));
      if (started.size() != next.pending_decision.enqueue.size()) {
        corrupt(r, "slice closed with enqueued events not started");
      }
      next.latest_report = advance(report, next.pending_decision, completions, r.time);
      next.pending_decision = {};
      started.clear();
    } else if (r.slice != report.slice_index) {
      corrupt(r, "slice " + std::to_string(r.slice) + " does not follow " +
                     std::to_string(report.slice_index));
    } else if (r.kind == RecordKind::kComplete || r.kind == RecordKind::kFeedback) {
      corrupt(r, "must open a new slice");
    } else if (r.time != report.time) {
      corrupt(r, "time differs from the slice boundary");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptLog) throw;
    corrupt(r, e.what());
  } catch (const nlohmann::json::exception& e) {
    corrupt(r, e.what());
  }

  const auto& current = next.latest_report;
  auto& decision = next.pending_decision;
  switch (r.kind) {
    case RecordKind::kComplete:
      if (!r.payload.contains("error")) {
        try {
          ArtifactMeta meta{r.payload.at("artifact_id").get<std::string>(), *r.event_id,
                            *r.attempt,
                            artifact_kind_from_string(r.payload.at("kind").get<std::string>()),
                            r.payload.at("content_hash").get<std::string>()};
          next.artifacts[meta.artifact_id] = meta;
        } catch (const std::exception& e) {
          corrupt(r, e.what());
        }
      }
      break;
    case RecordKind::kFeedback:
      break;
    case RecordKind::kRevoke: {
      const auto& id = require_event(r);
      if (!current.is_running(id) && !current.is_done(id)) corrupt(r, "revoked event not started");
      if (!decision.enqueue.empty()) corrupt(r, "revoke after enqueue");
      if (!decision.revoke.insert(id).second) corrupt(r, "revoked twice");
      decision.reason = r.payload.value("reason", std::string{});
      if (r.payload.contains("amendments")) {
        decision.amendments[id] = r.payload.at("amendments").get<Params>();
      }
      break;
    }
    case RecordKind::kEnqueue: {
      const auto& id = require_event(r);
      if (!current.is_pending(id) || decision.revoke.contains(id)) {
        corrupt(r, "enqueued event '" + id + "' is not pending");
      }
      if (r.attempt && *r.attempt != current.attempt_of(id)) corrupt(r, "attempt mismatch");
      if (decision.wait) corrupt(r, "enqueue after wait");
      if (!decision.enqueue.insert(id).second) corrupt(r, "enqueued twice");
      break;
    }
    case RecordKind::kStart: {
      const auto& id = require_event(r);
      if (!decision.enqueue.contains(id)) corrupt(r, "start without enqueue");
      if (r.attempt && *r.attempt != current.attempt_of(id)) corrupt(r, "attempt mismatch");
      if (!started.insert(id).second) corrupt(r, "started twice");
      break;
    }
    case RecordKind::kWait:
      if (!decision.empty()) corrupt(r, "wait with a nonempty decision");
      decision.wait = true;
      break;
    case RecordKind::kFinish:
      try {
        next.status = run_status_from_string(r.payload.at("status").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        corrupt(r, e.what());
      }
      if (next.status == RunStatus::kRunning) corrupt(r, "finish with status running");
      if (started.size() != decision.enqueue.size()) corrupt(r, "finish before starts");
      break;
  }

  state_ = std::move(next);
  started_ = std::move(started);
  ++next_seq_;
}

RunState replay_records(std::span<const EventLogRecord> records, const RunMeta& meta) {
  LogFolder folder(meta);
  for (const auto& r : records) folder.apply(r);
  return folder.state();
}

RunLog::RunLog(std::optional<fs::path> file) : file_(std::move(file)) {
  if (file_) {
    std::ofstream out(*file_, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + file_->string());
  }
}

std::uint64_t RunLog::append(const EventLogRecord& record) {
  {
    std::lock_guard lock(mu_);
    if (closed_) throw Error(ErrorCode::kRunClosed, "log is closed");
    if (record.seq != records_.size()) {
      throw Error(ErrorCode::kSequenceGap, "expected seq " + std::to_string(records_.size()) +
                                               ", got " + std::to_string(record.seq));
    }
    if (file_) {
      std::ofstream out(*file_, std::ios::app);
      out << to_line(record) << '\n';
      if (!out) throw Error(ErrorCode::kIo, "cannot append to " + file_->string());
    }
    records_.push_back(record);
    if (record.kind == RecordKind::kFinish) closed_ = true;
  }
  cv_.notify_all();
  return record.seq;
}

std::uint64_t RunLog::next_seq() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

bool RunLog::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

std::vector<EventLogRecord> RunLog::read(std::uint64_t from_seq, std::size_t limit) const {
  std::lock_guard lock(mu_);
  std::vector<EventLogRecord> out;
  for (auto i = from_seq; i < records_.size() && out.size() < limit; ++i) {
    out.push_back(records_[i]);
  }
  return out;
}

bool RunLog::wait_for(std::uint64_t seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return records_.size() > seq || closed_; });
}

std::string RunLog::bytes() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& r : records_) {
    out += to_line(r);
    out += '\n';
  }
  return out;
}

namespace {

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<fs::path> prepare_dir(const std::optional<fs::path>& dir) {
  if (!dir) return std::nullopt;
  std::error_code ec;
  fs::create_directories(*dir / "artifacts", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir->string() + ": " + ec.message());
  return *dir / "log.ndjson";
}

}  // namespace

RunHandle::RunHandle(RunMeta meta, std::optional<fs::path> dir)
    : meta_(std::move(meta)), dir_(std::move(dir)), log_(prepare_dir(dir_)), folder_(meta_) {}

std::uint64_t RunHandle::append(EventLogRecord record) {
  std::lock_guard lock(mu_);
  if (log_.closed()) throw Error(ErrorCode::kRunClosed, "run " + meta_.run_id + " is closed");
  LogFolder next = folder_;
  next.apply(record);
  const auto seq = log_.append(record);
  folder_ = std::move(next);
  return seq;
}

void RunHandle::put_artifact(const Artifact& artifact) {
  std::lock_guard lock(mu_);
  if (artifacts_.contains(artifact.id)) {
    throw Error(ErrorCode::kInvalidParams, "artifact " + artifact.id + " already written");
  }
  artifacts_.emplace(artifact.id, artifact);
  if (!dir_) return;
  const auto blob = *dir_ / "artifacts" / artifact.content_hash;
  if (!fs::exists(blob)) write_file(blob, artifact.content);
  nlohmann::json index = nlohmann::json::object();
  for (const auto& [id, a] : artifacts_) {
    index[id] = {{"event", a.event},
                 {"attempt", a.attempt},
                 {"kind", to_string(a.kind)},
                 {"content_hash", a.content_hash}};
  }
  write_file(*dir_ / "artifacts.json", index.dump(2));
}

std::optional<Artifact> RunHandle::artifact(const std::string& artifact_id) const {
  std::lock_guard lock(mu_);
  auto it = artifacts_.find(artifact_id);
  if (it == artifacts_.end()) return std::nullopt;
  return it->second;
}

std::vector<Artifact> RunHandle::artifacts() const {
  std::lock_guard lock(mu_);
  std::vector<Artifact> out;
  for (const auto& [id, a] : artifacts_) out.push_back(a);
  return out;
}

RunState RunHandle::state() const {
  std::lock_guard lock(mu_);
  return folder_.state();
}

void RunHandle::save_state(const RunState& state) {
  if (dir_) write_file(*dir_ / "state.json", nlohmann::json(state).dump(2));
}

void RunHandle::save_pipeline(const nlohmann::json& pipeline) {
  if (dir_) write_file(*dir_ / "pipeline.json", pipeline.dump(2));
}

RunStore::RunStore(std::optional<fs::path> root) : root_(std::move(root)) {}

std::shared_ptr<RunHandle> RunStore::create(RunMeta meta) {
  std::lock_guard lock(mu_);
  if (meta.run_id.empty()) {
    do {
      meta.run_id = "run-" + std::to_string(++counter_);
    } while (runs_.contains(meta.run_id) || (root_ && fs::exists(*root_ / meta.run_id)));
  } else if (runs_.contains(meta.run_id)) {
    throw Error(ErrorCode::kInvalidParams, "run " + meta.run_id + " already exists");
  }
  std::optional<fs::path> dir;
  if (root_) dir = *root_ / meta.run_id;
  auto handle = std::make_shared<RunHandle>(meta, dir);
  runs_.emplace(meta.run_id, handle);
  return handle;
}

std::shared_ptr<RunHandle> RunStore::find(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) throw Error(ErrorCode::kNotFound, "no run '" + run_id + "'");
  return it->second;
}

std::vector<std::string> RunStore::run_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, h] : runs_) out.push_back(id);
  return out;
}

std::uint64_t RunStore::append(const std::string& run_id, const EventLogRecord& record) {
  return find(run_id)->append(record);
}

RunState RunStore::replay(const std::string& run_id) const {
  auto handle = find(run_id);
  const auto records = handle->log().read(0);
  return replay_records(records, handle->meta());
}

namespace {

std::string first_difference(const nlohmann::json& a, const nlohmann::json& b,
                             const std::string& path) {
  if (a.type() != b.type() || !a.is_structured()) {
    return a == b ? std::string{} : path.empty() ? "/" : path;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) return path + "/" + k;
      if (auto d = first_difference(v, b.at(k), path + "/" + k); !d.empty()) return d;
    }
    for (const auto& [k, v] : b.items()) {
      if (!a.contains(k)) return path + "/" + k;
    }
    return {};
  }
  if (a.size() != b.size()) return path;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (auto d = first_difference(a[i], b[i], path + "/" + std::to_string(i)); !d.empty()) {
      return d;
    }
  }
  return {};
}

}  // namespace

Verification verify_run_dir(const fs::path& dir) {
  Verification v;
  const auto records = parse_log(read_file(dir / "log.ndjson"));
  RunMeta meta;
  if (fs::exists(dir / "state.json")) {
    try {
      v.stored = nlohmann::json::parse(read_file(dir / "state.json")).get<RunState>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptLog, std::string("state.json: ") + e.what());
    }
    meta = {v.stored->run_id, v.stored->pipeline, v.stored->seed};
  }
  v.replayed = replay_records(records, meta);
  if (!v.stored) {
    v.mismatch = "state.json missing";
  } else if (v.replayed == *v.stored) {
    v.verified = true;
  } else {
    v.mismatch = "differs at " + first_difference(nlohmann::json(v.replayed),
                                                  nlohmann::json(*v.stored), "");
  }
  return v;
}

std::vector<GanttRow> gantt_rows(std::span<const EventLogRecord> records) {
  std::vector<GanttRow> rows;
  std::map<EventId, std::size_t> latest;
  for (const auto& r : records) {
    if (!r.event_id) continue;
    const auto& id = *r.event_id;
    switch (r.kind) {
      case RecordKind::kStart:
        latest[id] = rows.size();
        rows.push_back({id, r.attempt.value_or(1), r.time, std::nullopt, false, false});
        break;
      case RecordKind::kComplete:
        if (auto it = latest.find(id); it != latest.end() && !rows[it->second].end) {
          rows[it->second].end = r.time;
          rows[it->second].failed = r.payload.contains("error");
        }
        break;
      case RecordKind::kRevoke:
        if (auto it = latest.find(id); it != latest.end()) {
          auto& row = rows[it->second];
          if (!row.end) row.end = r.time;
          row.revoked = true;
        }
        break;
      default:
        break;
    }
  }
  return rows;
}

void to_json(nlohmann::json& j, const GanttRow& row) {
  j = {{"event", row.event},
       {"attempt", row.attempt},
       {"start", row.start},
       {"end", row.end ? nlohmann::json(*row.end) : nlohmann::json()},
       {"revoked", row.revoked},
       {"failed", row.failed}};
}

}  // namespace filmflow
