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

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "filmflow/progress.hpp"
#include "filmflow/types.hpp"

namespace filmflow {

struct EventSpec {
  EventId id;
  std::string role;
  Params params;
  std::set<EventId> dependencies;
  std::optional<Ticks> duration;  // fixed mock duration, when the file sets one

  bool operator==(const EventSpec&) const = default;
};

// Keyword rule for emotion-aware dubbing; lives in the pipeline file.
struct EmotionRule {
  std::string keyword;
  std::string emotion;

  bool operator==(const EmotionRule&) const = default;
};

struct PipelineDef {
  std::string name;
  std::vector<EventSpec> events;
  std::vector<EmotionRule> emotion_rules;

  bool operator==(const PipelineDef&) const = default;
};

// Immutable, validated dependency graph. Safe to share between threads.
class ValidatedGraph {
 public:
  const std::string& name() const { return name_; }
  std::size_t size() const { return events_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  const std::vector<EventSpec>& events() const { return events_; }
  const std::vector<EmotionRule>& emotion_rules() const { return rules_; }
  bool contains(const EventId& id) const { return index_.contains(id); }
  const EventSpec& event(const EventId& id) const;

  // Dependency -> dependent adjacency.
  const std::set<EventId>& dependents(const EventId& id) const;
  const std::vector<EventId>& topo_order() const { return topo_order_; }
  std::size_t topo_position(const EventId& id) const;

 private:
  friend ValidatedGraph validate_pipeline(const PipelineDef& def);

  std::string name_;
  std::vector<EventSpec> events_;
  std::vector<EmotionRule> rules_;
  std::map<EventId, std::size_t> index_;
  std::vector<std::set<EventId>> dependents_;
  std::vector<EventId> topo_order_;
  std::vector<std::size_t> topo_position_;
  std::size_t edge_count_ = 0;
};

// Throws DuplicateId, UnknownDependency, CycleError or InvalidPipeline.
// Topological order prefers declaration order among available events.
ValidatedGraph validate_pipeline(const PipelineDef& def);

// Pending events whose every dependency is done.
std::set<EventId> ready_set(const ValidatedGraph& graph,
                            const ProgressReport& report);

bool is_complete(const ValidatedGraph& graph, const ProgressReport& report);

// Everything reachable along dependency -> dependent edges, excluding `id`.
std::set<EventId> transitive_dependents(const ValidatedGraph& graph,
                                        const EventId& id);

struct CriticalPath {
  Ticks length = 0;
  std::vector<EventId> path;

  bool operator==(const CriticalPath&) const = default;
};

// Longest root-to-sink chain by summed duration. Among equal lengths the
// lexicographically smallest id sequence wins.
CriticalPath critical_path(const ValidatedGraph& graph,
                           const DurationMap& durations);

Ticks serial_makespan(const ValidatedGraph& graph, const DurationMap& durations);

// Durations declared in the pipeline file; MissingDuration if any is absent.
DurationMap declared_durations(const ValidatedGraph& graph);

}  // namespace filmflow
