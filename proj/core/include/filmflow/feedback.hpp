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
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/graph.hpp"
#include "filmflow/progress.hpp"
#include "filmflow/types.hpp"

namespace filmflow {

// Interaction types, from least to most expressive.
enum class FeedbackKind { kYesNo, kCritical, kDetailed };
enum class Verdict { kApprove, kReject };

// A user comment c_t. `target` names an event ("dialogue") or an artifact
// ("dialogue@1"). YesNo carries no note; Critical carries a note only;
// Detailed carries a note and optional parameter amendments.
struct Feedback {
  std::string id;
  Ticks arrival_time = 0;
  std::string target;
  FeedbackKind kind = FeedbackKind::kYesNo;
  Verdict verdict = Verdict::kApprove;
  std::string note;
  Params amendments;

  bool operator==(const Feedback&) const = default;
};

// Throws InvalidFeedback when the kind invariants do not hold.
void validate_feedback(const Feedback& feedback);

struct RevocationPlan {
  std::set<EventId> revocations;
  std::map<EventId, Params> amendments_by_event;
  std::string reason;  // feedback id

  bool empty() const { return revocations.empty(); }
  bool operator==(const RevocationPlan&) const = default;
};

struct ResolvedTarget {
  EventId event;
  std::optional<int> attempt;  // set when the target named an artifact
};

// Event ids resolve directly; "event@attempt" resolves to the producing
// event and attempt. Throws UnknownTarget.
ResolvedTarget resolve_target(const std::string& target,
                              const ValidatedGraph& graph);

// Approve yields an empty plan. Reject revokes the target plus every running
// or done transitive dependent; the note (as "director_note") and any
// Detailed amendments are attached to the target only.
RevocationPlan interpret(const Feedback& feedback, const ProgressReport& report,
                         const ValidatedGraph& graph);

// Pluggable route from feedback to a revocation plan. The structured
// interpreter above is the normative one; free-text backends implement this.
class FeedbackInterpreter {
 public:
  virtual ~FeedbackInterpreter() = default;
  virtual RevocationPlan interpret(const Feedback& feedback,
                                   const ProgressReport& report,
                                   const ValidatedGraph& graph) const = 0;
};

class StructuredInterpreter final : public FeedbackInterpreter {
 public:
  RevocationPlan interpret(const Feedback& feedback,
                           const ProgressReport& report,
                           const ValidatedGraph& graph) const override;
};

enum class FrequencyLevel { kNone, kLow, kIntermediate, kNoLimits };
enum class EligiblePoints { kAfterEachEvent, kAfterMilestones, kFinalOnly };

struct FrequencyPolicy {
  FrequencyLevel level = FrequencyLevel::kNoLimits;
  std::optional<int> max_interactions;  // nullopt: unlimited
  EligiblePoints eligible = EligiblePoints::kAfterEachEvent;

  static FrequencyPolicy none();
  static FrequencyPolicy low(int max_interactions = 1);
  static FrequencyPolicy intermediate(int max_interactions = 3);
  static FrequencyPolicy no_limits();
  static FrequencyPolicy from_name(std::string_view name);
};

std::string_view to_string(FrequencyLevel level);

// Milestones are events flagged with params["milestone"] = "true", plus every
// sink and every event with two or more dependents.
bool is_milestone(const ValidatedGraph& graph, const EventId& id);

// Fires on the first completion of `after`, or at time `at`.
struct Trigger {
  std::optional<EventId> after;
  std::optional<Ticks> at;

  bool operator==(const Trigger&) const = default;
};

struct TraceItem {
  Trigger trigger;
  Feedback feedback;

  bool operator==(const TraceItem&) const = default;
};

using FeedbackTrace = std::vector<TraceItem>;

// Deterministic user stand-in. Items whose trigger is not an eligible point
// under the policy are dropped, then the first max_interactions remaining
// items (in trace order) are admitted.
class ScriptedFeedbackSource {
 public:
  ScriptedFeedbackSource() = default;
  ScriptedFeedbackSource(FeedbackTrace trace, FrequencyPolicy policy,
                         const ValidatedGraph& graph);

  const FeedbackTrace& admitted() const { return admitted_; }
  std::vector<std::pair<Ticks, Feedback>> timed() const;
  // Feedback released by the first completion of `id`; later calls for the
  // same event return nothing.
  std::vector<Feedback> on_completion(const EventId& id);

 private:
  FeedbackTrace admitted_;
  std::set<EventId> completed_;
};

ScriptedFeedbackSource scripted_feedback_source(FeedbackTrace trace,
                                                FrequencyPolicy policy,
                                                const ValidatedGraph& graph);

void to_json(nlohmann::json& j, const Feedback& feedback);
void from_json(const nlohmann::json& j, Feedback& feedback);
void to_json(nlohmann::json& j, const TraceItem& item);
void from_json(const nlohmann::json& j, TraceItem& item);

// Trace files are a JSON list of
// {trigger: {after: ID} | {at: T}, target, kind, verdict, note?, amendments?, id?}.
// Missing ids are assigned as "fb-<index>".
FeedbackTrace parse_feedback_trace(const nlohmann::json& j);
FeedbackTrace load_feedback_trace(const std::string& path);

std::string_view to_string(FeedbackKind kind);
std::string_view to_string(Verdict verdict);

}  // namespace filmflow
