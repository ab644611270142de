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

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/types.hpp"

namespace filmflow {

struct RunningEntry {
  EventId id;
  int attempt = 1;
  Ticks start = 0;

  bool operator==(const RunningEntry&) const = default;
};

struct DoneEntry {
  EventId id;
  int attempt = 1;
  std::string artifact_id;
  std::string content_hash;
  Ticks finish = 0;

  bool operator==(const DoneEntry&) const = default;
};

struct RevocationEntry {
  std::int64_t slice = 0;
  EventId id;
  int attempt = 1;
  std::string reason;

  bool operator==(const RevocationEntry&) const = default;
};

// Snapshot of the run at a slice boundary. An event that is neither running,
// done nor failed is pending; its attempt number is one more than the number
// of times it has been revoked.
struct ProgressReport {
  std::int64_t slice_index = 0;
  Ticks time = 0;  // boundary time that opened this slice
  std::map<EventId, RunningEntry> running;
  std::map<EventId, DoneEntry> done;
  std::vector<RevocationEntry> revoked_history;
  std::map<EventId, int> failures;  // failed tries of the current attempt
  std::set<EventId> failed;         // retry budget exhausted
  std::map<EventId, Params> overlays;  // feedback amendments per event

  int attempt_of(const EventId& id) const;
  bool is_running(const EventId& id) const { return running.contains(id); }
  bool is_done(const EventId& id) const { return done.contains(id); }
  bool is_failed(const EventId& id) const { return failed.contains(id); }
  bool is_pending(const EventId& id) const {
    return !is_running(id) && !is_done(id) && !is_failed(id);
  }

  bool operator==(const ProgressReport&) const = default;
};

// One boundary's plan: enqueue Q_t, revoke R_t, or wait.
struct ScheduleDecision {
  std::set<EventId> enqueue;
  std::set<EventId> revoke;
  bool wait = false;
  std::string reason;                       // feedback id behind revoke
  std::map<EventId, Params> amendments;     // keys are a subset of revoke

  bool empty() const { return enqueue.empty() && revoke.empty(); }
  bool operator==(const ScheduleDecision&) const = default;
};

// A worker finishing one try of (id, attempt). A failed try carries `error`;
// `exhausted` marks the try that used up the retry budget.
struct Completion {
  EventId id;
  int attempt = 1;
  Ticks time = 0;
  std::string artifact_id;
  std::string content_hash;
  std::optional<std::string> error;
  bool exhausted = false;

  bool ok() const { return !error.has_value(); }
  bool operator==(const Completion&) const = default;
};

// Progress report update: revocations first, then enqueued events start at
// the report's boundary time, then completions land. The result opens slice
// t + 1 at `boundary_time`.
ProgressReport advance(const ProgressReport& report,
                       const ScheduleDecision& decision,
                       std::span<const Completion> completions,
                       Ticks boundary_time);

void to_json(nlohmann::json& j, const ProgressReport& report);
void from_json(const nlohmann::json& j, ProgressReport& report);
void to_json(nlohmann::json& j, const ScheduleDecision& decision);
void from_json(const nlohmann::json& j, ScheduleDecision& decision);

}  // namespace filmflow
