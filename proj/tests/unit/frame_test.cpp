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

#include "plvc/error.hpp"
#include "plvc/frame.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

using testing::TempDir;

TEST(Frame, RejectsOutOfRangeAndNonFinite) {
  EXPECT_THROW(Frame(torch::full({3, 16, 16}, 1.5f)), ModelError);
  EXPECT_THROW(Frame(torch::full({3, 16, 16}, -0.1f)), ModelError);
  EXPECT_THROW(Frame(torch::full({3, 16, 16}, NAN)), ModelError);
  EXPECT_THROW(Frame(torch::zeros({4, 16, 16})), ModelError);
  EXPECT_NO_THROW(Frame(torch::zeros({1, 3, 16, 16})));
}

TEST(Frame, DivisibilityCheck) {
  Frame f(torch::zeros({3, 48, 40}));
  EXPECT_NO_THROW(f.require_divisible(8));
  EXPECT_THROW(f.require_divisible(16), ConfigError);
}

TEST(VideoClip, RejectsMixedSizes) {
  std::vector<Frame> frames{Frame(torch::zeros({3, 16, 16})), Frame(torch::zeros({3, 16, 32}))};
  EXPECT_THROW(VideoClip{frames}, ModelError);
}

TEST(FrameIo, ByteEndpoints) {
  std::vector<uint8_t> rgb(4 * 4 * 3, 0);
  rgb[0] = 255;
  const Frame f = frame_from_rgb8(rgb, 4, 4);
  EXPECT_EQ(f.pixels()[0][0][0].item<float>(), 1.0f);
  EXPECT_EQ(f.pixels()[1][0][0].item<float>(), 0.0f);
}

TEST(FrameIo, HalfRoundsAwayFromZero) {
  EXPECT_EQ(to_byte(0.5f), 128);
  EXPECT_EQ(to_byte(0.0f), 0);
  EXPECT_EQ(to_byte(1.0f), 255);
  TempDir dir;
  save_clip(VideoClip({Frame(torch::full({3, 8, 8}, 0.5f))}), dir.path());
  const VideoClip back = load_clip(dir.path());
  EXPECT_FLOAT_EQ(back[0].pixels()[0][3][3].item<float>(), 128.0f / 255.0f);
}

TEST(FrameIo, SevenFramesLoadInOrder) {
  TempDir dir;
  std::vector<Frame> frames;
  for (int t = 0; t < 7; ++t) frames.emplace_back(torch::full({3, 64, 64}, t / 10.0f));
  save_clip(VideoClip(frames), dir.path());
  for (int t = 1; t <= 7; ++t) {
    EXPECT_TRUE(std::filesystem::exists(dir / ("im" + std::to_string(t) + ".png")));
  }
  const VideoClip clip = load_clip(dir.path());
  ASSERT_EQ(clip.size(), 7u);
  EXPECT_EQ(clip.height(), 64);
  EXPECT_EQ(clip.width(), 64);
  for (int t = 0; t < 7; ++t) {
    EXPECT_FLOAT_EQ(clip[t].pixels()[1][5][5].item<float>(), to_byte(t / 10.0f) / 255.0f);
  }
}

TEST(FrameIo, SingleFrameClip) {
  TempDir dir;
  save_clip(VideoClip({Frame(testing::random_image(16, 24, 3))}), dir.path());
  const VideoClip clip = load_clip(dir.path());
  EXPECT_EQ(clip.size(), 1u);
  EXPECT_EQ(clip.width(), 24);
}

TEST(FrameIo, RoundtripErrorBound) {
  TempDir dir;
  std::vector<Frame> frames;
  for (int t = 0; t < 3; ++t) frames.emplace_back(testing::random_image(32, 32, 10 + t));
  const VideoClip clip(frames);
  save_clip(clip, dir.path());
  const VideoClip back = load_clip(dir.path());
  const double err = (back.to_tensor() - clip.to_tensor()).abs().max().item<double>();
  EXPECT_LE(err, 1.0 / 510.0 + 1e-7);
}

TEST(FrameIo, Errors) {
  TempDir dir;
  EXPECT_THROW(save_clip(VideoClip(), dir.path()), IoError);
  EXPECT_THROW(load_clip(dir / "missing"), IoError);
  EXPECT_THROW(load_clip(dir.path()), IoError);  // no frames
  save_clip(VideoClip({Frame(torch::zeros({3, 8, 8})), Frame(torch::zeros({3, 8, 8}))}), dir.path());
  std::filesystem::rename(dir / "im2.png", dir / "im3.png");
  EXPECT_THROW(load_clip(dir.path()), IoError);  // gap in indices
  std::filesystem::remove(dir / "im3.png");
  const std::vector<uint8_t> rgb(16 * 16 * 3, 7);
  write_png(dir / "im2.png", rgb, 16, 16);
  EXPECT_THROW(load_clip(dir.path()), IoError);  // inconsistent size
}

TEST(FrameIo, FrameNames) {
  EXPECT_EQ(format_frame_name(kDefaultFramePattern, 12), "im12.png");
}

}  // namespace
}  // namespace plvc
