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

#ifndef PLVC_DATASET_HPP_
#define PLVC_DATASET_HPP_

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plvc/frame.hpp"

namespace plvc {

enum class MotionProfile { kTranslate, kRotate, kMixed };

std::string to_string(MotionProfile p);
MotionProfile parse_motion_profile(const std::string& s);

struct DatasetSpec {
  int64_t clip_count = 16;
  int64_t frames_per_clip = 7;
  int64_t frame_size = 64;
  uint64_t seed = 1;
  MotionProfile motion_profile = MotionProfile::kMixed;

  void validate() const;
};

// One rendered clip together with the motion that produced it.
struct RenderedClip {
  VideoClip clip;
  // Shared by every object in the clip; integer pixels per frame, |v| <= 3.
  std::array<int, 2> velocity{0, 0};
  double angular_velocity = 0.0;  // radians per frame
  // masks[object][t] is the [H, W] antialiased coverage of that object.
  std::vector<std::vector<torch::Tensor>> masks;
};

inline constexpr int kMaxSpeed = 3;

RenderedClip render_clip(const DatasetSpec& spec, int64_t clip_index);

// Writes clip_0000/im1.png ... plus a per-clip motion.json log.
// Returns the dataset hash (see hash_directory).
std::string synth_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

// SHA-256 over the sorted relative paths and contents of every regular file.
std::string hash_directory(const std::filesystem::path& dir);

// All clips under `dir` (sorted subdirectories), stacked as [N, T, 3, H, W].
// Clips shorter than the first are rejected.
torch::Tensor load_dataset(const std::filesystem::path& dir);

}  // namespace plvc

#endif  // PLVC_DATASET_HPP_
