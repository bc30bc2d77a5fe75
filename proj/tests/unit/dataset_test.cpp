/* Copyright 2026 The PLVC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "plvc/dataset.hpp"
#include "plvc/error.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

using testing::TempDir;

DatasetSpec small_spec(uint64_t seed, MotionProfile profile = MotionProfile::kMixed) {
  DatasetSpec s;
  s.clip_count = 3;
  s.frames_per_clip = 7;
  s.frame_size = 32;
  s.seed = seed;
  s.motion_profile = profile;
  return s;
}

TEST(Dataset, SameSpecSameBytes) {
  TempDir a, b;
  const auto ha = synth_dataset(small_spec(1), a.path());
  const auto hb = synth_dataset(small_spec(1), b.path());
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(ha, hash_directory(a.path()));
  TempDir c;
  EXPECT_NE(ha, synth_dataset(small_spec(2), c.path()));
}

TEST(Dataset, SevenFramesPerClip) {
  TempDir dir;
  synth_dataset(small_spec(4), dir.path());
  for (int clip = 0; clip < 3; ++clip) {
    const auto folder = dir / ("clip_000" + std::to_string(clip));
    for (int t = 1; t <= 7; ++t) {
      EXPECT_TRUE(std::filesystem::exists(folder / ("im" + std::to_string(t) + ".png")));
    }
    EXPECT_FALSE(std::filesystem::exists(folder / "im8.png"));
  }
  const auto data = load_dataset(dir.path());
  EXPECT_EQ(data.sizes(), (std::vector<int64_t>{3, 7, 3, 32, 32}));
}

TEST(Dataset, DefaultsMatchTrainingClipLength) {
  EXPECT_EQ(DatasetSpec{}.frames_per_clip, 7);
}

TEST(Dataset, MotionLogMatchesRenderer) {
  TempDir dir;
  const auto spec = small_spec(9, MotionProfile::kTranslate);
  synth_dataset(spec, dir.path());
  for (int clip = 0; clip < 3; ++clip) {
    std::ifstream f(dir / ("clip_000" + std::to_string(clip)) / "motion.json");
    const auto log = nlohmann::json::parse(f);
    const auto rendered = render_clip(spec, clip);
    EXPECT_EQ(log.at("velocity").get<std::vector<int>>(),
              std::vector<int>(rendered.velocity.begin(), rendered.velocity.end()));
  }
}

// Centroid of each object's coverage mask moves by the logged velocity on
// every frame where the object is fully visible in both frames.
TEST(Dataset, TranslateCentroidsFollowVelocity) {
  DatasetSpec spec = small_spec(0, MotionProfile::kTranslate);
  spec.frame_size = 64;
  int checked = 0;
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    spec.seed = seed;
    const auto r = render_clip(spec, 0);
    EXPECT_LE(r.velocity[0] * r.velocity[0] + r.velocity[1] * r.velocity[1],
              kMaxSpeed * kMaxSpeed);
    EXPECT_EQ(r.angular_velocity, 0.0);
    for (const auto& track : r.masks) {
      for (size_t t = 0; t + 1 < track.size(); ++t) {
        const auto& m0 = track[t];
        const auto& m1 = track[t + 1];
        const double s0 = m0.sum().item<double>(), s1 = m1.sum().item<double>();
        if (std::abs(s0 - s1) > 1e-9 || s0 == 0.0) continue;
        // Skip objects touching the border.
        if (m0.select(0, 0).sum().item<double>() + m0.select(0, 63).sum().item<double>() +
                m0.select(1, 0).sum().item<double>() + m0.select(1, 63).sum().item<double>() +
                m1.select(0, 0).sum().item<double>() + m1.select(0, 63).sum().item<double>() +
                m1.select(1, 0).sum().item<double>() + m1.select(1, 63).sum().item<double>() >
            0.0) {
          continue;
        }
        const auto xs = torch::arange(64, torch::kFloat64);
        auto centroid = [&](const torch::Tensor& m) {
          const auto md = m.to(torch::kFloat64);
          const double total = md.sum().item<double>();
          return std::array<double, 2>{(md * xs.view({1, 64})).sum().item<double>() / total,
                                       (md * xs.view({64, 1})).sum().item<double>() / total};
        };
        const auto c0 = centroid(m0), c1 = centroid(m1);
        EXPECT_NEAR(c1[0] - c0[0], r.velocity[0], 1e-6);
        EXPECT_NEAR(c1[1] - c0[1], r.velocity[1], 1e-6);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Dataset, RotateProfileHasNoTranslation) {
  const auto r = render_clip(small_spec(5, MotionProfile::kRotate), 0);
  EXPECT_EQ(r.velocity[0], 0);
  EXPECT_EQ(r.velocity[1], 0);
  EXPECT_NE(r.angular_velocity, 0.0);
}

TEST(Dataset, InvalidSpecs) {
  DatasetSpec s;
  s.clip_count = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = DatasetSpec{};
  s.frames_per_clip = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(parse_motion_profile("zoom"), ConfigError);
}

}  // namespace
}  // namespace plvc
