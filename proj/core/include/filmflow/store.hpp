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
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/crew.hpp"
#include "filmflow/event_log.hpp"
#include "filmflow/progress.hpp"

namespace filmflow {

enum class RunStatus { kRunning, kCompleted, kFailed };

std::string_view to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view name);

struct ArtifactMeta {
  std::string artifact_id;
  EventId event;
  int attempt = 1;
  ArtifactKind kind = ArtifactKind::kCustom;
  std::string content_hash;

  bool operator==(const ArtifactMeta&) const = default;
};

struct RunMeta {
  std::string run_id;
  std::string pipeline;
  std::uint64_t seed = kDefaultSeed;
};

struct RunState {
  std::string run_id;
  std::string pipeline;
  std::uint64_t seed = kDefaultSeed;
  RunStatus status = RunStatus::kRunning;
  ProgressReport latest_report;
  ScheduleDecision pending_decision;  // logged in the latest slice so far
  std::map<std::string, ArtifactMeta> artifacts;

  std::int64_t slice_count() const { return latest_report.slice_index + 1; }
  bool operator==(const RunState&) const = default;
};

void to_json(nlohmann::json& j, const RunState& state);
void from_json(const nlohmann::json& j, RunState& state);

// Incremental fold of a log through the progress-report update. Every
// record is checked against the state machine; violations raise CorruptLog.
class LogFolder {
 public:
  explicit LogFolder(RunMeta meta = {});

  void apply(const EventLogRecord& record);
  const RunState& state() const { return state_; }
  std::uint64_t next_seq() const { return next_seq_; }

 private:
  RunState state_;
  std::uint64_t next_seq_ = 0;
  std::set<EventId> started_;  // enqueued events started in this slice
};

RunState replay_records(std::span<const EventLogRecord> records,
                        const RunMeta& meta = {});

// Append-only record sequence with an optional newline-delimited file sink.
// One writer, any number of readers. A finish record closes the log.
class RunLog {
 public:
  explicit RunLog(std::optional<std::filesystem::path> file = {});

  // Throws SequenceGap unless record.seq == next_seq(); RunClosed after finish.
  std::uint64_t append(const EventLogRecord& record);
  std::uint64_t next_seq() const;
  bool closed() const;

  std::vector<EventLogRecord> read(
      std::uint64_t from_seq,
      std::size_t limit = std::numeric_limits<std::size_t>::max()) const;
  // Blocks until a record with seq >= `seq` exists or the log closes.
  // Returns false on timeout.
  bool wait_for(std::uint64_t seq, std::chrono::milliseconds timeout) const;

  std::string bytes() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<EventLogRecord> records_;
  bool closed_ = false;
  std::optional<std::filesystem::path> file_;
};

// Persistence for one run. Directory layout:
//   <dir>/log.ndjson        one record per line
//   <dir>/state.json        RunState written at run end
//   <dir>/pipeline.json     the pipeline definition the run used
//   <dir>/artifacts/<hash>  artifact payloads, content-addressed
//   <dir>/artifacts.json    artifact id -> metadata
class RunHandle {
 public:
  RunHandle(RunMeta meta, std::optional<std::filesystem::path> dir);

  const RunMeta& meta() const { return meta_; }
  const std::optional<std::filesystem::path>& dir() const { return dir_; }
  const RunLog& log() const { return log_; }

  // Appends and folds. A record the fold rejects is not appended.
  std::uint64_t append(EventLogRecord record);
  std::uint64_t next_seq() const { return log_.next_seq(); }

  void put_artifact(const Artifact& artifact);
  std::optional<Artifact> artifact(const std::string& artifact_id) const;
  std::vector<Artifact> artifacts() const;

  // The live fold of everything appended so far.
  RunState state() const;
  void save_state(const RunState& state);
  void save_pipeline(const nlohmann::json& pipeline);

 private:
  RunMeta meta_;
  std::optional<std::filesystem::path> dir_;
  RunLog log_;
  mutable std::mutex mu_;
  LogFolder folder_;
  std::map<std::string, Artifact> artifacts_;
};

class RunStore {
 public:
  explicit RunStore(std::optional<std::filesystem::path> root = {});

  // Assigns "run-<n>" when meta.run_id is empty.
  std::shared_ptr<RunHandle> create(RunMeta meta);
  std::shared_ptr<RunHandle> find(const std::string& run_id) const;  // NotFound
  std::vector<std::string> run_ids() const;

  std::uint64_t append(const std::string& run_id, const EventLogRecord& record);
  RunState replay(const std::string& run_id) const;

 private:
  std::optional<std::filesystem::path> root_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<RunHandle>> runs_;
  std::uint64_t counter_ = 0;
};

struct Verification {
  RunState replayed;
  std::optional<RunState> stored;
  bool verified = false;
  std::string mismatch;
};

// Folds <dir>/log.ndjson and compares with <dir>/state.json.
Verification verify_run_dir(const std::filesystem::path& dir);

struct GanttRow {
  EventId event;
  int attempt = 1;
  Ticks start = 0;
  std::optional<Ticks> end;
  bool revoked = false;
  bool failed = false;

  bool operator==(const GanttRow&) const = default;
};

// One row per start record, closed by the matching completion or revocation.
std::vector<GanttRow> gantt_rows(std::span<const EventLogRecord> records);
void to_json(nlohmann::json& j, const GanttRow& row);

}  // namespace filmflow
