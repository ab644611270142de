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

#include "filmflow/simulation.hpp"

#include "filmflow/error.hpp"

namespace filmflow {

OccurrenceId VirtualClock::schedule(Ticks at, Occurrence occurrence) {
  if (at < now_) {
    throw Error(ErrorCode::kPastTime, "cannot schedule at " + std::to_string(at) +
                                          ", clock is at " + std::to_string(now_));
  }
  const OccurrenceId id = next_id_++;
  Key key{at, occurrence.kind, occurrence.key, id};
  queue_.insert(key);
  live_.emplace(id, std::make_pair(std::move(key), std::move(occurrence)));
  return id;
}

bool VirtualClock::cancel(OccurrenceId id) {
  auto it = live_.find(id);
  if (it == live_.end()) return false;
  queue_.erase(it->second.first);
  live_.erase(it);
  return true;
}

bool VirtualClock::has_pending(Ticks at, OccurrenceKind kind) const {
  auto it = queue_.lower_bound(Key{at, kind, std::string{}, 0});
  return it != queue_.end() && std::get<0>(*it) == at && std::get<1>(*it) == kind;
}

std::optional<FiredOccurrence> VirtualClock::next() {
  if (queue_.empty()) return std::nullopt;
  auto first = queue_.begin();
  const OccurrenceId id = std::get<3>(*first);
  const Ticks at = std::get<0>(*first);
  queue_.erase(first);
  auto node = live_.extract(id);
  now_ = at;
  return FiredOccurrence{at, id, std::move(node.mapped().second)};
}

}  // namespace filmflow
