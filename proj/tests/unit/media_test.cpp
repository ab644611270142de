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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "filmflow/error.hpp"
#include "filmflow/media.hpp"
#include "test_support.hpp"

namespace filmflow {
namespace {

std::vector<std::int64_t> lengths(const ExtensionPlan& plan) {
  std::vector<std::int64_t> out;
  for (const auto& s : plan.segments) out.push_back(s.length);
  return out;
}

TEST(Emotions, EmptyLinesGiveNoTags) {
  const auto rules = default_emotion_rules();
  EXPECT_TRUE(assign_emotions({}, rules).empty());
}

TEST(Emotions, FirstMatchingRuleWinsElseNeutral) {
  const std::vector<EmotionRule> rules{{"dare", "anger"}, {"what", "surprise"}};
  const std::vector<std::string> lines{"How dare you!", "It is raining.", "What? How dare..."};
  const auto tags = assign_emotions(lines, rules);
  ASSERT_EQ(tags.size(), 3u);
  EXPECT_EQ(tags[0], (EmotionTag{0, "anger"}));
  EXPECT_EQ(tags[1], (EmotionTag{1, std::string(kNeutralEmotion)}));
  EXPECT_EQ(tags[2].emotion, "anger");
}

TEST(Emotions, DefaultTableCoversTheBasicVocabulary) {
  std::set<std::string> emotions;
  for (const auto& r : default_emotion_rules()) emotions.insert(r.emotion);
  EXPECT_TRUE(emotions.contains("anger"));
  EXPECT_TRUE(emotions.contains("surprise"));
  EXPECT_TRUE(emotions.contains("whisper"));
}

TEST(Emotions, OrderOfNonOverlappingRulesDoesNotMatter) {
  std::mt19937_64 rng(41);
  const std::vector<std::string> words{"dare", "what", "hush", "storm", "gift", "ghost"};
  for (int round = 0; round < 200; ++round) {
    std::vector<EmotionRule> rules;
    for (std::size_t i = 0; i < words.size(); ++i) {
      rules.push_back({words[i], "e" + std::to_string(i)});
    }
    // Each line carries at most one keyword, so no two rules compete.
    std::vector<std::string> lines;
    const auto n = rng() % 10;
    for (std::size_t k = 0; k < n; ++k) {
      const auto pick = rng() % (words.size() + 1);
      lines.push_back(pick == words.size() ? "plain line" : "a " + words[pick] + " line");
    }
    const auto before = assign_emotions(lines, rules);
    std::shuffle(rules.begin(), rules.end(), rng);
    EXPECT_EQ(assign_emotions(lines, rules), before);
    EXPECT_EQ(before.size(), lines.size());
  }
}

TEST(ShotLength, Examples) {
  EXPECT_EQ(shot_length_from_voiceover(2.0, 8), 16);
  EXPECT_EQ(shot_length_from_voiceover(3.3, 24), 80);
  EXPECT_EQ(shot_length_from_voiceover(0.01, 8), 1);
  EXPECT_EQ(shot_length_from_voiceover(0.1, 30), 3);
}

TEST(ShotLength, Errors) {
  EXPECT_THROW(shot_length_from_voiceover(0.0, 8), Error);
  EXPECT_THROW(shot_length_from_voiceover(-1.0, 8), Error);
  EXPECT_THROW(shot_length_from_voiceover(1.0, 0), Error);
  try {
    shot_length_from_voiceover(0.0, 8);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositiveDuration);
  }
}

TEST(ShotLength, MatchesCeilingOverRandomInputs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> seconds(0.001, 60.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = seconds(rng);
    const int fps = 1 + static_cast<int>(rng() % 60);
    const auto frames = shot_length_from_voiceover(s, fps);
    EXPECT_GE(frames, 1);
    // Smallest frame count covering the voice line.
    EXPECT_GE(static_cast<double>(frames) + 1e-9, s * fps);
    if (frames > 1) {
      EXPECT_LT(static_cast<double>(frames - 1), s * fps);
    }
  }
}

TEST(LongShot, FitsOneRound) {
  const auto plan = plan_long_shot(14, 14);
  ASSERT_EQ(plan.segments.size(), 1u);
  EXPECT_EQ(plan.segments[0],
            (ShotSegment{SegmentDirection::kForward, 14, KeyframeSource::scene_frame()}));
  EXPECT_EQ(plan_long_shot(5, 14).segments[0].length, 5);
}

TEST(LongShot, SingleExtensionHasNoReverse) {
  const auto plan = plan_long_shot(27, 14);
  EXPECT_EQ(lengths(plan), (std::vector<std::int64_t>{14, 13}));
  EXPECT_EQ(plan.segments[1].direction, SegmentDirection::kForward);
  EXPECT_EQ(plan.segments[1].keyframe_source, KeyframeSource::boundary_of(0));
}

TEST(LongShot, SecondExtensionReversesTheFirst) {
  const auto plan = plan_long_shot(40, 14);
  EXPECT_EQ(lengths(plan), (std::vector<std::int64_t>{14, 13, 13}));
  EXPECT_EQ(plan.total_frames(), 40);
  EXPECT_EQ(plan.segments[2].direction, SegmentDirection::kReverse);
  EXPECT_EQ(plan.segments[2].keyframe_source, KeyframeSource::boundary_of(1));
  EXPECT_EQ(ending_keyframe(plan), KeyframeSource::boundary_of(0));
}

TEST(LongShot, LaterExtensionsReanchorOnFirstSegment) {
  const auto plan = plan_long_shot(60, 14);
  ASSERT_EQ(plan.segments.size(), 5u);
  for (std::size_t i = 3; i < plan.segments.size(); ++i) {
    EXPECT_EQ(plan.segments[i].direction, SegmentDirection::kForward);
    EXPECT_EQ(plan.segments[i].keyframe_source, KeyframeSource::boundary_of(0));
  }
}

TEST(LongShot, InvalidParams) {
  EXPECT_THROW(plan_long_shot(0, 14), Error);
  EXPECT_THROW(plan_long_shot(10, 1), Error);
}

TEST(LongShot, CoverageIsMinimalAndMatchesEnumeration) {
  for (std::int64_t l = 2; l <= 32; ++l) {
    for (std::int64_t t = 1; t <= 200; ++t) {
      const auto plan = plan_long_shot(t, l);
      const auto total = plan.total_frames();
      ASSERT_GE(total, t) << t << "/" << l;
      ASSERT_LT(total - plan.segments.back().length, t) << t << "/" << l;
      ASSERT_EQ(lengths(plan), testing::enumerate_extension(t, l)) << t << "/" << l;
      ASSERT_EQ(plan.segments[0].direction, SegmentDirection::kForward);
      ASSERT_EQ(plan.segments[0].keyframe_source, KeyframeSource::scene_frame());
      if (plan.segments.size() >= 3) {
        ASSERT_EQ(plan.segments[2].direction, SegmentDirection::kReverse);
      }
    }
  }
}

TEST(Timeline, SingleScene) {
  const std::vector<std::pair<std::string, double>> scenes{{"s1", 10.0}};
  const auto tl = build_edit_timeline(scenes, 1.0, {"v1"}, "m");
  ASSERT_EQ(tl.entries.size(), 1u);
  EXPECT_FALSE(tl.entries[0].cross_dissolve.has_value());
  EXPECT_DOUBLE_EQ(tl.total_duration(), 10.0);
}

TEST(Timeline, ThreeScenesWithOverlap) {
  const std::vector<std::pair<std::string, double>> scenes{{"s1", 10}, {"s2", 10}, {"s3", 10}};
  const auto tl = build_edit_timeline(scenes, 1.0, {"v1", "v2"}, "music");
  EXPECT_DOUBLE_EQ(tl.total_duration(), 28.0);
  EXPECT_EQ(tl.entries[0].cross_dissolve, 1.0);
  EXPECT_EQ(tl.entries[1].cross_dissolve, 1.0);
  EXPECT_FALSE(tl.entries[2].cross_dissolve.has_value());
  EXPECT_TRUE(tl.audio.merged);
  EXPECT_EQ(tl.audio.voice_refs, (std::vector<std::string>{"v1", "v2"}));
  EXPECT_EQ(tl.audio.music_ref, "music");
}

TEST(Timeline, ZeroOverlapConcatenates) {
  const std::vector<std::pair<std::string, double>> scenes{{"a", 3}, {"b", 4.5}};
  const auto tl = build_edit_timeline(scenes, 0.0, {}, "m");
  EXPECT_DOUBLE_EQ(tl.total_duration(), 7.5);
  for (const auto& e : tl.entries) EXPECT_FALSE(e.cross_dissolve.has_value());
}

TEST(Timeline, Errors) {
  const std::vector<std::pair<std::string, double>> scenes{{"a", 3}, {"b", 4}};
  try {
    build_edit_timeline(scenes, 3.0, {}, "m");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverlapTooLarge);
  }
  EXPECT_THROW(build_edit_timeline({}, 0.0, {}, "m"), Error);
  EXPECT_THROW(build_edit_timeline(scenes, -1.0, {}, "m"), Error);
  // One scene never overlaps anything, so a long overlap is harmless.
  const std::vector<std::pair<std::string, double>> one{{"a", 3}};
  EXPECT_NO_THROW(build_edit_timeline(one, 5.0, {}, "m"));
}

TEST(Timeline, TotalMatchesSumMinusOverlapsOnRandomInputs) {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 500; ++i) {
    const double overlap = static_cast<double>(rng() % 20) / 10.0;
    std::vector<std::pair<std::string, double>> scenes;
    double sum = 0;
    const auto n = 1 + rng() % 8;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = overlap + 0.1 + static_cast<double>(rng() % 100) / 10.0;
      scenes.emplace_back("s" + std::to_string(k), d);
      sum += d;
    }
    const auto tl = build_edit_timeline(scenes, overlap, {}, "m");
    EXPECT_NEAR(tl.total_duration(), sum - static_cast<double>(n - 1) * overlap, 1e-9);
    EXPECT_FALSE(tl.entries.back().cross_dissolve.has_value());
  }
}

}  // namespace
}  // namespace filmflow
