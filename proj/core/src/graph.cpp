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

#include "filmflow/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>

#include "filmflow/error.hpp"

namespace filmflow {

const EventSpec& ValidatedGraph::event(const EventId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownId, "no event '" + id + "'");
  return events_[it->second];
}

const std::set<EventId>& ValidatedGraph::dependents(const EventId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownId, "no event '" + id + "'");
  return dependents_[it->second];
}

std::size_t ValidatedGraph::topo_position(const EventId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownId, "no event '" + id + "'");
  return topo_position_[it->second];
}

namespace {

// Every node in `remaining` has a dependency inside `remaining`, so walking
// dependencies from any of them must revisit a node.
std::vector<EventId> find_cycle(const std::vector<EventSpec>& events,
                                const std::map<EventId, std::size_t>& index,
                                const std::vector<bool>& remaining) {
  std::size_t start = 0;
  while (!remaining[start]) ++start;
  std::map<std::size_t, std::size_t> seen_at;
  std::vector<std::size_t> walk;
  std::size_t node = start;
  while (!seen_at.contains(node)) {
    seen_at[node] = walk.size();
    walk.push_back(node);
    for (const auto& dep : events[node].dependencies) {
      std::size_t d = index.at(dep);
      if (remaining[d]) {
        node = d;
        break;
      }
    }
  }
  std::vector<EventId> cycle;
  for (std::size_t i = seen_at[node]; i < walk.size(); ++i) {
    cycle.push_back(events[walk[i]].id);
  }
  cycle.push_back(events[node].id);
  return cycle;
}

}  // namespace

ValidatedGraph validate_pipeline(const PipelineDef& def) {
  ValidatedGraph g;
  g.name_ = def.name;
  g.events_ = def.events;
  g.rules_ = def.emotion_rules;

  for (std::size_t i = 0; i < g.events_.size(); ++i) {
    const auto& e = g.events_[i];
    if (e.id.empty()) {
      throw Error(ErrorCode::kInvalidPipeline,
                  "event #" + std::to_string(i) + " has an empty id");
    }
    if (e.role.empty()) {
      throw Error(ErrorCode::kInvalidPipeline, "event '" + e.id + "' has no role");
    }
    if (e.duration && *e.duration < 0) {
      throw Error(ErrorCode::kInvalidPipeline,
                  "event '" + e.id + "' has a negative duration");
    }
    if (!g.index_.emplace(e.id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "event id '" + e.id + "' is declared twice");
    }
  }

  const std::size_t n = g.events_.size();
  g.dependents_.resize(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = g.events_[i];
    for (const auto& dep : e.dependencies) {
      if (dep == e.id) throw CycleError({e.id, e.id});
      auto it = g.index_.find(dep);
      if (it == g.index_.end()) {
        throw Error(ErrorCode::kUnknownDependency,
                    "event '" + e.id + "' depends on undeclared '" + dep + "'");
      }
      g.dependents_[it->second].insert(e.id);
      ++indegree[i];
      ++g.edge_count_;
    }
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  g.topo_position_.assign(n, 0);
  while (!ready.empty()) {
    std::size_t i = ready.top();
    ready.pop();
    g.topo_position_[i] = g.topo_order_.size();
    g.topo_order_.push_back(g.events_[i].id);
    for (const auto& dependent : g.dependents_[i]) {
      std::size_t d = g.index_.at(dependent);
      if (--indegree[d] == 0) ready.push(d);
    }
  }
  if (g.topo_order_.size() != n) {
    std::vector<bool> remaining(n, false);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = indegree[i] > 0;
    throw CycleError(find_cycle(g.events_, g.index_, remaining));
  }
  return g;
}

std::set<EventId> ready_set(const ValidatedGraph& graph,
                            const ProgressReport& report) {
  std::set<EventId> ready;
  for (const auto& e : graph.events()) {
    if (!report.is_pending(e.id)) continue;
    bool satisfied = std::all_of(e.dependencies.begin(), e.dependencies.end(),
                                 [&](const EventId& d) { return report.is_done(d); });
    if (satisfied) ready.insert(e.id);
  }
  return ready;
}

bool is_complete(const ValidatedGraph& graph, const ProgressReport& report) {
  return std::all_of(graph.events().begin(), graph.events().end(),
                     [&](const EventSpec& e) { return report.is_done(e.id); });
}

std::set<EventId> transitive_dependents(const ValidatedGraph& graph,
                                        const EventId& id) {
  std::set<EventId> seen;
  std::deque<EventId> frontier{id};
  graph.event(id);  // UnknownId
  while (!frontier.empty()) {
    EventId current = std::move(frontier.front());
    frontier.pop_front();
    for (const auto& next : graph.dependents(current)) {
      if (seen.insert(next).second) frontier.push_back(next);
    }
  }
  return seen;
}

namespace {

Ticks duration_of(const DurationMap& durations, const EventId& id) {
  auto it = durations.find(id);
  if (it == durations.end()) {
    throw Error(ErrorCode::kMissingDuration, "no duration for event '" + id + "'");
  }
  if (it->second < 0) {
    throw Error(ErrorCode::kInvalidParams, "negative duration for event '" + id + "'");
  }
  return it->second;
}

}  // namespace

CriticalPath critical_path(const ValidatedGraph& graph,
                           const DurationMap& durations) {
  for (const auto& e : graph.events()) duration_of(durations, e.id);

  // best[v]: heaviest chain from v to a sink, smallest id sequence on ties.
  std::map<EventId, CriticalPath> best;
  const auto& order = graph.topo_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const EventId& v = *it;
    const CriticalPath* tail = nullptr;
    for (const auto& w : graph.dependents(v)) {
      const CriticalPath& candidate = best.at(w);
      if (tail == nullptr || candidate.length > tail->length ||
          (candidate.length == tail->length && candidate.path < tail->path)) {
        tail = &candidate;
      }
    }
    CriticalPath here;
    here.length = durations.at(v);
    here.path.push_back(v);
    if (tail != nullptr) {
      here.length += tail->length;
      here.path.insert(here.path.end(), tail->path.begin(), tail->path.end());
    }
    best.emplace(v, std::move(here));
  }

  CriticalPath result;
  bool found = false;
  for (const auto& e : graph.events()) {
    if (!e.dependencies.empty()) continue;
    const CriticalPath& candidate = best.at(e.id);
    if (!found || candidate.length > result.length ||
        (candidate.length == result.length && candidate.path < result.path)) {
      result = candidate;
      found = true;
    }
  }
  return result;
}

Ticks serial_makespan(const ValidatedGraph& graph, const DurationMap& durations) {
  Ticks total = 0;
  for (const auto& e : graph.events()) total += duration_of(durations, e.id);
  return total;
}

DurationMap declared_durations(const ValidatedGraph& graph) {
  DurationMap out;
  for (const auto& e : graph.events()) {
    if (!e.duration) {
      throw Error(ErrorCode::kMissingDuration,
                  "event '" + e.id + "' declares no duration");
    }
    out.emplace(e.id, *e.duration);
  }
  return out;
}

}  // namespace filmflow
