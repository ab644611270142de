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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "filmflow/graph.hpp"

namespace filmflow {

// ---------------------------------------------------------------------------
// Emotion-aware dubbing
// ---------------------------------------------------------------------------

inline constexpr std::string_view kNeutralEmotion = "neutral";

struct EmotionTag {
  std::size_t line_index = 0;
  std::string emotion;

  bool operator==(const EmotionTag&) const = default;
};

// One tag per line: the first rule (in table order) whose keyword occurs in
// the line, compared case-insensitively; otherwise neutral.
std::vector<EmotionTag> assign_emotions(std::span<const std::string> lines,
                                        std::span<const EmotionRule> rules);

// anger / surprise / whisper keywords plus the neutral default.
std::vector<EmotionRule> default_emotion_rules();

// ---------------------------------------------------------------------------
// Shot length
// ---------------------------------------------------------------------------

// ceil(voice_seconds * fps), at least one frame. Products within 1e-9 of an
// integer count as that integer so that 0.1 s at 30 fps is 3 frames.
std::int64_t shot_length_from_voiceover(double voice_seconds, int fps);

// ---------------------------------------------------------------------------
// Long-shot extension
// ---------------------------------------------------------------------------

enum class SegmentDirection { kForward, kReverse };

struct KeyframeSource {
  enum class Kind { kSceneFrame, kBoundary } kind = Kind::kSceneFrame;
  std::size_t segment = 0;  // for kBoundary: the segment whose end is used

  static KeyframeSource scene_frame() { return {}; }
  static KeyframeSource boundary_of(std::size_t index) {
    return {Kind::kBoundary, index};
  }
  bool operator==(const KeyframeSource&) const = default;
};

struct ShotSegment {
  SegmentDirection direction = SegmentDirection::kForward;
  std::int64_t length = 0;
  KeyframeSource keyframe_source;

  bool operator==(const ShotSegment&) const = default;
};

struct ExtensionPlan {
  std::int64_t segment_len = 0;
  std::int64_t target_frames = 0;
  std::vector<ShotSegment> segments;

  std::int64_t total_frames() const;
  bool operator==(const ExtensionPlan&) const = default;
};

// The video model emits `segment_len` frames per call. The first segment is
// conditioned on the scene frame; each extension reuses the previous end
// frame as its keyframe and so adds segment_len - 1 new frames. When two or
// more extensions are needed, the second one replays the first in reverse,
// which lands back on segment 0's terminal keyframe; later extensions are
// conditioned on that keyframe again.
ExtensionPlan plan_long_shot(std::int64_t target_frames, std::int64_t segment_len);

// The keyframe the plan's final frame coincides with.
KeyframeSource ending_keyframe(const ExtensionPlan& plan);

// ---------------------------------------------------------------------------
// Edit timeline
// ---------------------------------------------------------------------------

struct TimelineEntry {
  std::string scene_id;
  double duration = 0.0;
  std::optional<double> cross_dissolve;  // overlap with the next entry

  bool operator==(const TimelineEntry&) const = default;
};

struct AudioMix {
  std::vector<std::string> voice_refs;
  std::string music_ref;
  bool merged = false;

  bool operator==(const AudioMix&) const = default;
};

struct EditTimeline {
  std::vector<TimelineEntry> entries;
  AudioMix audio;

  double total_duration() const;
  bool operator==(const EditTimeline&) const = default;
};

// Splices scenes with a cross dissolve of `overlap` seconds between
// neighbours (none when overlap is zero) and merges voice tracks with the
// music bed into one channel.
EditTimeline build_edit_timeline(
    std::span<const std::pair<std::string, double>> scenes, double overlap,
    std::vector<std::string> voice_refs, std::string music_ref);

void to_json(nlohmann::json& j, const ExtensionPlan& plan);
void to_json(nlohmann::json& j, const EditTimeline& timeline);

}  // namespace filmflow
