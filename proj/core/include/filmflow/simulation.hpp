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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>

#include "filmflow/types.hpp"

namespace filmflow {

// Occurrence kinds in the order they fire when scheduled for the same time.
enum class OccurrenceKind : std::uint8_t {
  kRequeue = 0,
  kCompletion = 1,
  kFeedback = 2,
};

struct Occurrence {
  OccurrenceKind kind = OccurrenceKind::kCompletion;
  std::string key;       // event id for completions, feedback id for feedback
  std::uint64_t token = 0;  // caller's handle, returned untouched

  bool operator==(const Occurrence&) const = default;
};

using OccurrenceId = std::uint64_t;

struct FiredOccurrence {
  Ticks time = 0;
  OccurrenceId id = 0;
  Occurrence occurrence;
};

// Discrete-event clock. Pops by (time, kind, key, insertion order); `now`
// never decreases. Single-threaded.
class VirtualClock {
 public:
  Ticks now() const { return now_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  // Throws PastTime when at < now().
  OccurrenceId schedule(Ticks at, Occurrence occurrence);
  bool cancel(OccurrenceId id);
  // Whether an occurrence of `kind` is scheduled at exactly `at`.
  bool has_pending(Ticks at, OccurrenceKind kind) const;
  // nullopt once nothing is scheduled: the end of the simulation.
  std::optional<FiredOccurrence> next();

 private:
  using Key = std::tuple<Ticks, OccurrenceKind, std::string, OccurrenceId>;

  Ticks now_ = 0;
  OccurrenceId next_id_ = 0;
  std::set<Key> queue_;
  std::map<OccurrenceId, std::pair<Key, Occurrence>> live_;
};

}  // namespace filmflow
