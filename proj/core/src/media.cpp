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

#include "filmflow/media.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "filmflow/error.hpp"

namespace filmflow {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::vector<EmotionTag> assign_emotions(std::span<const std::string> lines,
                                        std::span<const EmotionRule> rules) {
  std::vector<std::pair<std::string, const EmotionRule*>> lowered;
  lowered.reserve(rules.size());
  for (const auto& rule : rules) lowered.emplace_back(lowercase(rule.keyword), &rule);

  std::vector<EmotionTag> tags;
  tags.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = lowercase(lines[i]);
    std::string emotion(kNeutralEmotion);
    for (const auto& [keyword, rule] : lowered) {
      if (!keyword.empty() && line.find(keyword) != std::string::npos) {
        emotion = rule->emotion;
        break;
      }
    }
    tags.push_back({i, std::move(emotion)});
  }
  return tags;
}

std::vector<EmotionRule> default_emotion_rules() {
  return {{"dare", "anger"},  {"how could", "anger"}, {"what?", "surprise"},
          {"really?", "surprise"}, {"quiet", "whisper"}, {"hush", "whisper"}};
}

std::int64_t shot_length_from_voiceover(double voice_seconds, int fps) {
  if (!std::isfinite(voice_seconds) || voice_seconds <= 0.0) {
    throw Error(ErrorCode::kNonPositiveDuration, "voiceover duration must be positive");
  }
  if (fps < 1) throw Error(ErrorCode::kInvalidParams, "fps must be at least 1");
  const double frames = voice_seconds * fps;
  const double nearest = std::round(frames);
  const double exact = std::abs(frames - nearest) <= 1e-9 * std::max(1.0, frames)
                           ? nearest
                           : std::ceil(frames);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(exact));
}

std::int64_t ExtensionPlan::total_frames() const {
  std::int64_t total = 0;
  for (const auto& s : segments) total += s.length;
  return total;
}

ExtensionPlan plan_long_shot(std::int64_t target_frames, std::int64_t segment_len) {
  if (target_frames < 1 || segment_len < 2) {
    throw Error(ErrorCode::kInvalidParams,
                "long shot needs target_frames >= 1 and segment_len >= 2");
  }
  ExtensionPlan plan{segment_len, target_frames, {}};
  plan.segments.push_back({SegmentDirection::kForward, std::min(target_frames, segment_len),
                           KeyframeSource::scene_frame()});
  if (target_frames <= segment_len) return plan;

  const std::int64_t step = segment_len - 1;
  const std::int64_t extensions = (target_frames - segment_len + step - 1) / step;
  for (std::int64_t k = 1; k <= extensions; ++k) {
    if (k == 1) {
      plan.segments.push_back(
          {SegmentDirection::kForward, step, KeyframeSource::boundary_of(0)});
    } else if (k == 2) {
      plan.segments.push_back(
          {SegmentDirection::kReverse, step, KeyframeSource::boundary_of(1)});
    } else {
      plan.segments.push_back(
          {SegmentDirection::kForward, step, KeyframeSource::boundary_of(0)});
    }
  }
  return plan;
}

KeyframeSource ending_keyframe(const ExtensionPlan& plan) {
  const std::size_t last = plan.segments.size() - 1;
  // Playing extension 1 backwards ends where it started.
  if (plan.segments[last].direction == SegmentDirection::kReverse) {
    return KeyframeSource::boundary_of(0);
  }
  return KeyframeSource::boundary_of(last);
}

double EditTimeline::total_duration() const {
  double total = 0.0;
  for (const auto& e : entries) {
    total += e.duration;
    if (e.cross_dissolve) total -= *e.cross_dissolve;
  }
  return total;
}

EditTimeline build_edit_timeline(std::span<const std::pair<std::string, double>> scenes,
                                 double overlap, std::vector<std::string> voice_refs,
                                 std::string music_ref) {
  if (scenes.empty()) throw Error(ErrorCode::kInvalidParams, "timeline needs a scene");
  if (!std::isfinite(overlap) || overlap < 0.0) {
    throw Error(ErrorCode::kInvalidParams, "overlap must be nonnegative");
  }
  if (music_ref.empty()) throw Error(ErrorCode::kInvalidParams, "timeline needs a music ref");
  EditTimeline timeline;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& [id, duration] = scenes[i];
    if (!std::isfinite(duration) || duration <= 0.0) {
      throw Error(ErrorCode::kInvalidParams, "scene '" + id + "' needs a positive duration");
    }
    if (scenes.size() >= 2 && duration <= overlap) {
      throw Error(ErrorCode::kOverlapTooLarge,
                  "scene '" + id + "' is not longer than the cross dissolve");
    }
    TimelineEntry entry{id, duration, std::nullopt};
    if (i + 1 < scenes.size() && overlap > 0.0) entry.cross_dissolve = overlap;
    timeline.entries.push_back(std::move(entry));
  }
  timeline.audio = {std::move(voice_refs), std::move(music_ref), true};
  return timeline;
}

void to_json(nlohmann::json& j, const ExtensionPlan& plan) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : plan.segments) {
    nlohmann::json source =
        s.keyframe_source.kind == KeyframeSource::Kind::kSceneFrame
            ? nlohmann::json("scene_frame")
            : nlohmann::json({{"boundary_of", s.keyframe_source.segment}});
    segments.push_back({{"direction", s.direction == SegmentDirection::kForward ? "forward"
                                                                                 : "reverse"},
                        {"length", s.length},
                        {"keyframe_source", source}});
  }
  j = {{"segment_len", plan.segment_len},
       {"target_frames", plan.target_frames},
       {"segments", segments}};
}

void to_json(nlohmann::json& j, const EditTimeline& timeline) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : timeline.entries) {
    nlohmann::json transition =
        e.cross_dissolve ? nlohmann::json({{"cross_dissolve", *e.cross_dissolve}})
                         : nlohmann::json("none");
    entries.push_back(
        {{"scene", e.scene_id}, {"duration", e.duration}, {"transition_out", transition}});
  }
  j = {{"entries", entries},
       {"total_duration", timeline.total_duration()},
       {"audio",
        {{"voice_refs", timeline.audio.voice_refs},
         {"music_ref", timeline.audio.music_ref},
         {"merged", timeline.audio.merged}}}};
}

}  // namespace filmflow
