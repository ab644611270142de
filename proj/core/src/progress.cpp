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

#include "filmflow/progress.hpp"

#include <algorithm>

#include "filmflow/error.hpp"

namespace filmflow {

int ProgressReport::attempt_of(const EventId& id) const {
  auto revocations = std::count_if(revoked_history.begin(), revoked_history.end(),
                                   [&](const RevocationEntry& r) { return r.id == id; });
  return 1 + static_cast<int>(revocations);
}

ProgressReport advance(const ProgressReport& report,
                       const ScheduleDecision& decision,
                       std::span<const Completion> completions,
                       Ticks boundary_time) {
  if (boundary_time < report.time) {
    throw Error(ErrorCode::kInvalidDecision, "boundary time moves backwards");
  }
  ProgressReport next = report;

  for (const auto& id : decision.revoke) {
    int attempt = 0;
    if (auto it = next.running.find(id); it != next.running.end()) {
      attempt = it->second.attempt;
      next.running.erase(it);
    } else if (auto dt = next.done.find(id); dt != next.done.end()) {
      attempt = dt->second.attempt;
      next.done.erase(dt);
    } else {
      throw Error(ErrorCode::kInvalidDecision,
                  "cannot revoke '" + id + "': neither running nor done");
    }
    next.failures.erase(id);
    next.revoked_history.push_back({report.slice_index, id, attempt, decision.reason});
  }
  for (const auto& [id, overrides] : decision.amendments) {
    if (!decision.revoke.contains(id)) {
      throw Error(ErrorCode::kInvalidDecision,
                  "amendments for '" + id + "' which is not revoked");
    }
    auto& overlay = next.overlays[id];
    for (const auto& [key, value] : overrides) overlay[key] = value;
  }

  for (const auto& id : decision.enqueue) {
    if (decision.revoke.contains(id) || !next.is_pending(id)) {
      throw Error(ErrorCode::kInvalidDecision, "cannot enqueue '" + id + "': not pending");
    }
    next.running.emplace(id, RunningEntry{id, next.attempt_of(id), report.time});
  }

  for (const auto& c : completions) {
    auto it = next.running.find(c.id);
    if (it == next.running.end() || it->second.attempt != c.attempt) {
      throw Error(ErrorCode::kUnknownCompletion,
                  "completion of '" + c.id + "@" + std::to_string(c.attempt) +
                      "' which is not running");
    }
    if (c.time < it->second.start) {
      throw Error(ErrorCode::kUnknownCompletion,
                  "completion of '" + c.id + "' precedes its start");
    }
    next.running.erase(it);
    if (c.ok()) {
      next.failures.erase(c.id);
      next.done.emplace(c.id, DoneEntry{c.id, c.attempt, c.artifact_id, c.content_hash, c.time});
    } else {
      ++next.failures[c.id];
      if (c.exhausted) next.failed.insert(c.id);
    }
  }

  ++next.slice_index;
  next.time = boundary_time;
  return next;
}

void to_json(nlohmann::json& j, const ProgressReport& r) {
  nlohmann::json running = nlohmann::json::array();
  for (const auto& [id, e] : r.running) {
    running.push_back({{"id", id}, {"attempt", e.attempt}, {"start", e.start}});
  }
  nlohmann::json done = nlohmann::json::array();
  for (const auto& [id, e] : r.done) {
    done.push_back({{"id", id},
                    {"attempt", e.attempt},
                    {"artifact_id", e.artifact_id},
                    {"content_hash", e.content_hash},
                    {"finish", e.finish}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : r.revoked_history) {
    history.push_back(
        {{"slice", e.slice}, {"id", e.id}, {"attempt", e.attempt}, {"reason", e.reason}});
  }
  j = {{"slice_index", r.slice_index},
       {"time", r.time},
       {"running", running},
       {"done", done},
       {"revoked_history", history},
       {"failures", r.failures},
       {"failed", r.failed},
       {"overlays", r.overlays}};
}

void from_json(const nlohmann::json& j, ProgressReport& r) {
  r = {};
  r.slice_index = j.at("slice_index").get<std::int64_t>();
  r.time = j.at("time").get<Ticks>();
  for (const auto& e : j.at("running")) {
    RunningEntry entry{e.at("id").get<std::string>(), e.at("attempt").get<int>(),
                       e.at("start").get<Ticks>()};
    r.running.emplace(entry.id, entry);
  }
  for (const auto& e : j.at("done")) {
    DoneEntry entry{e.at("id").get<std::string>(), e.at("attempt").get<int>(),
                    e.at("artifact_id").get<std::string>(),
                    e.at("content_hash").get<std::string>(), e.at("finish").get<Ticks>()};
    r.done.emplace(entry.id, entry);
  }
  for (const auto& e : j.at("revoked_history")) {
    r.revoked_history.push_back({e.at("slice").get<std::int64_t>(),
                                 e.at("id").get<std::string>(), e.at("attempt").get<int>(),
                                 e.at("reason").get<std::string>()});
  }
  r.failures = j.at("failures").get<std::map<EventId, int>>();
  r.failed = j.at("failed").get<std::set<EventId>>();
  r.overlays = j.at("overlays").get<std::map<EventId, Params>>();
}

void to_json(nlohmann::json& j, const ScheduleDecision& d) {
  j = {{"enqueue", d.enqueue},
       {"revoke", d.revoke},
       {"wait", d.wait},
       {"reason", d.reason},
       {"amendments", d.amendments}};
}

void from_json(const nlohmann::json& j, ScheduleDecision& d) {
  d.enqueue = j.at("enqueue").get<std::set<EventId>>();
  d.revoke = j.at("revoke").get<std::set<EventId>>();
  d.wait = j.at("wait").get<bool>();
  d.reason = j.at("reason").get<std::string>();
  d.amendments = j.at("amendments").get<std::map<EventId, Params>>();
}

}  // namespace filmflow
