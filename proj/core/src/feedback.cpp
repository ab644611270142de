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

#include "filmflow/feedback.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "filmflow/error.hpp"

namespace filmflow {

std::string_view to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kYesNo: return "yes_no";
    case FeedbackKind::kCritical: return "critical";
    case FeedbackKind::kDetailed: return "detailed";
  }
  return "yes_no";
}

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kApprove ? "approve" : "reject";
}

std::string_view to_string(FrequencyLevel level) {
  switch (level) {
    case FrequencyLevel::kNone: return "none";
    case FrequencyLevel::kLow: return "low";
    case FrequencyLevel::kIntermediate: return "intermediate";
    case FrequencyLevel::kNoLimits: return "no_limits";
  }
  return "no_limits";
}

void validate_feedback(const Feedback& fb) {
  if (fb.target.empty()) throw Error(ErrorCode::kInvalidFeedback, "feedback has no target");
  switch (fb.kind) {
    case FeedbackKind::kYesNo:
      if (!fb.note.empty() || !fb.amendments.empty()) {
        throw Error(ErrorCode::kInvalidFeedback, "yes/no feedback carries no note or amendments");
      }
      break;
    case FeedbackKind::kCritical:
      if (fb.note.empty()) throw Error(ErrorCode::kInvalidFeedback, "critical feedback needs a note");
      if (!fb.amendments.empty()) {
        throw Error(ErrorCode::kInvalidFeedback, "critical feedback carries no amendments");
      }
      break;
    case FeedbackKind::kDetailed:
      if (fb.note.empty()) throw Error(ErrorCode::kInvalidFeedback, "detailed feedback needs a note");
      break;
  }
}

ResolvedTarget resolve_target(const std::string& target, const ValidatedGraph& graph) {
  if (graph.contains(target)) return {target, std::nullopt};
  auto at = target.rfind('@');
  if (at != std::string::npos) {
    EventId event = target.substr(0, at);
    std::string_view digits(target.data() + at + 1, target.size() - at - 1);
    int attempt = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), attempt);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && attempt >= 1 &&
        graph.contains(event)) {
      return {event, attempt};
    }
  }
  throw Error(ErrorCode::kUnknownTarget, "'" + target + "' names no event or artifact");
}

RevocationPlan interpret(const Feedback& fb, const ProgressReport& report,
                         const ValidatedGraph& graph) {
  validate_feedback(fb);
  ResolvedTarget target = resolve_target(fb.target, graph);
  RevocationPlan plan;
  plan.reason = fb.id;
  if (fb.verdict == Verdict::kApprove) return plan;

  const EventId& event = target.event;
  if (!report.is_running(event) && !report.is_done(event)) {
    throw Error(ErrorCode::kTargetPending,
                "'" + event + "' has not started; there is nothing to revoke");
  }
  if (target.attempt && *target.attempt != report.attempt_of(event)) {
    throw Error(ErrorCode::kUnknownTarget,
                "artifact '" + fb.target + "' was superseded by attempt " +
                    std::to_string(report.attempt_of(event)));
  }

  plan.revocations.insert(event);
  for (const auto& dependent : transitive_dependents(graph, event)) {
    if (report.is_running(dependent) || report.is_done(dependent)) {
      plan.revocations.insert(dependent);
    }
  }

  Params overlay;
  if (fb.kind != FeedbackKind::kYesNo) overlay["director_note"] = fb.note;
  if (fb.kind == FeedbackKind::kDetailed) {
    for (const auto& [key, value] : fb.amendments) overlay[key] = value;
  }
  if (!overlay.empty()) plan.amendments_by_event.emplace(event, std::move(overlay));
  return plan;
}

RevocationPlan StructuredInterpreter::interpret(const Feedback& feedback,
                                                const ProgressReport& report,
                                                const ValidatedGraph& graph) const {
  return filmflow::interpret(feedback, report, graph);
}

FrequencyPolicy FrequencyPolicy::none() {
  return {FrequencyLevel::kNone, 0, EligiblePoints::kFinalOnly};
}
FrequencyPolicy FrequencyPolicy::low(int max_interactions) {
  return {FrequencyLevel::kLow, max_interactions, EligiblePoints::kAfterMilestones};
}
FrequencyPolicy FrequencyPolicy::intermediate(int max_interactions) {
  return {FrequencyLevel::kIntermediate, max_interactions, EligiblePoints::kAfterMilestones};
}
FrequencyPolicy FrequencyPolicy::no_limits() {
  return {FrequencyLevel::kNoLimits, std::nullopt, EligiblePoints::kAfterEachEvent};
}

FrequencyPolicy FrequencyPolicy::from_name(std::string_view name) {
  if (name == "none") return none();
  if (name == "low") return low();
  if (name == "intermediate") return intermediate();
  if (name == "no_limits" || name == "nolimits") return no_limits();
  throw Error(ErrorCode::kBadRequest, "unknown frequency policy '" + std::string(name) + "'");
}

bool is_milestone(const ValidatedGraph& graph, const EventId& id) {
  const auto& e = graph.event(id);
  if (auto it = e.params.find("milestone"); it != e.params.end()) return it->second == "true";
  auto fanout = graph.dependents(id).size();
  return fanout == 0 || fanout >= 2;
}

namespace {

bool eligible(const Trigger& trigger, EligiblePoints points, const ValidatedGraph& graph) {
  switch (points) {
    case EligiblePoints::kAfterEachEvent:
      return true;
    case EligiblePoints::kAfterMilestones:
      return !trigger.after || is_milestone(graph, *trigger.after);
    case EligiblePoints::kFinalOnly:
      return trigger.after && graph.dependents(*trigger.after).empty();
  }
  return false;
}

}  // namespace

ScriptedFeedbackSource::ScriptedFeedbackSource(FeedbackTrace trace, FrequencyPolicy policy,
                                               const ValidatedGraph& graph) {
  for (auto& item : trace) {
    const Trigger& t = item.trigger;
    if (t.after.has_value() == t.at.has_value()) {
      throw Error(ErrorCode::kTraceTriggerUnknown,
                  "trigger of '" + item.feedback.id + "' needs exactly one of after/at");
    }
    if (t.after && !graph.contains(*t.after)) {
      throw Error(ErrorCode::kTraceTriggerUnknown,
                  "trigger event '" + *t.after + "' is not in the pipeline");
    }
    if (t.at && *t.at < 0) {
      throw Error(ErrorCode::kTraceTriggerUnknown, "trigger time must be nonnegative");
    }
  }
  for (auto& item : trace) {
    if (policy.max_interactions &&
        static_cast<int>(admitted_.size()) >= *policy.max_interactions) {
      break;
    }
    if (eligible(item.trigger, policy.eligible, graph)) admitted_.push_back(std::move(item));
  }
}

std::vector<std::pair<Ticks, Feedback>> ScriptedFeedbackSource::timed() const {
  std::vector<std::pair<Ticks, Feedback>> out;
  for (const auto& item : admitted_) {
    if (item.trigger.at) out.emplace_back(*item.trigger.at, item.feedback);
  }
  return out;
}

std::vector<Feedback> ScriptedFeedbackSource::on_completion(const EventId& id) {
  std::vector<Feedback> out;
  if (!completed_.insert(id).second) return out;
  for (const auto& item : admitted_) {
    if (item.trigger.after == id) out.push_back(item.feedback);
  }
  return out;
}

ScriptedFeedbackSource scripted_feedback_source(FeedbackTrace trace, FrequencyPolicy policy,
                                                const ValidatedGraph& graph) {
  return ScriptedFeedbackSource(std::move(trace), policy, graph);
}

void to_json(nlohmann::json& j, const Feedback& fb) {
  j = {{"id", fb.id},
       {"arrival_time", fb.arrival_time},
       {"target", fb.target},
       {"kind", to_string(fb.kind)},
       {"verdict", to_string(fb.verdict)},
       {"note", fb.note},
       {"amendments", fb.amendments}};
}

void from_json(const nlohmann::json& j, Feedback& fb) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidFeedback, "feedback must be an object");
  fb = {};
  fb.id = j.value("id", std::string{});
  fb.arrival_time = j.value("arrival_time", Ticks{0});
  fb.target = j.value("target", std::string{});
  const std::string kind = j.value("kind", std::string{"yes_no"});
  if (kind == "yes_no" || kind == "yesno") {
    fb.kind = FeedbackKind::kYesNo;
  } else if (kind == "critical") {
    fb.kind = FeedbackKind::kCritical;
  } else if (kind == "detailed") {
    fb.kind = FeedbackKind::kDetailed;
  } else {
    throw Error(ErrorCode::kInvalidFeedback, "unknown feedback kind '" + kind + "'");
  }
  const std::string verdict = j.value("verdict", std::string{"approve"});
  if (verdict == "approve") {
    fb.verdict = Verdict::kApprove;
  } else if (verdict == "reject") {
    fb.verdict = Verdict::kReject;
  } else {
    throw Error(ErrorCode::kInvalidFeedback, "unknown verdict '" + verdict + "'");
  }
  fb.note = j.value("note", std::string{});
  if (auto it = j.find("amendments"); it != j.end() && !it->is_null()) {
    for (const auto& [key, value] : it->items()) {
      fb.amendments[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
}

void to_json(nlohmann::json& j, const TraceItem& item) {
  to_json(j, item.feedback);
  nlohmann::json trigger = nlohmann::json::object();
  if (item.trigger.after) trigger["after"] = *item.trigger.after;
  if (item.trigger.at) trigger["at"] = *item.trigger.at;
  j["trigger"] = trigger;
}

void from_json(const nlohmann::json& j, TraceItem& item) {
  from_json(j, item.feedback);
  item.trigger = {};
  const auto& trigger = j.at("trigger");
  if (trigger.contains("after")) item.trigger.after = trigger.at("after").get<std::string>();
  if (trigger.contains("at")) item.trigger.at = trigger.at("at").get<Ticks>();
}

FeedbackTrace parse_feedback_trace(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kBadRequest, "feedback trace must be a list");
  FeedbackTrace trace;
  try {
    for (std::size_t i = 0; i < j.size(); ++i) {
      TraceItem item = j[i].get<TraceItem>();
      if (item.feedback.id.empty()) item.feedback.id = "fb-" + std::to_string(i + 1);
      validate_feedback(item.feedback);
      trace.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadRequest, std::string("malformed feedback trace: ") + e.what());
  }
  return trace;
}

FeedbackTrace load_feedback_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kBadRequest, std::string("malformed trace file: ") + e.what());
  }
  return parse_feedback_trace(doc);
}

}  // namespace filmflow
