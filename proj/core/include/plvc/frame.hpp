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

#ifndef PLVC_FRAME_HPP_
#define PLVC_FRAME_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace plvc {

// An RGB picture stored channel-first as a [3, H, W] float32 tensor with
// every value in [0, 1].
class Frame {
 public:
  Frame() = default;
  // Validates shape, finiteness and range. Accepts [3,H,W] or [1,3,H,W].
  explicit Frame(torch::Tensor pixels);

  int64_t height() const { return pixels_.size(1); }
  int64_t width() const { return pixels_.size(2); }
  const torch::Tensor& pixels() const { return pixels_; }
  bool defined() const { return pixels_.defined(); }

  // Rejects sizes that are not multiples of `factor` (no padding is done).
  void require_divisible(int64_t factor) const;

 private:
  torch::Tensor pixels_;
};

class VideoClip {
 public:
  VideoClip() = default;
  explicit VideoClip(std::vector<Frame> frames);
  // [T, 3, H, W] tensor; frames must share dimensions.
  static VideoClip from_tensor(const torch::Tensor& frames);

  void push_back(Frame frame);
  size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  int64_t height() const;
  int64_t width() const;
  const Frame& operator[](size_t i) const { return frames_.at(i); }
  const std::vector<Frame>& frames() const { return frames_; }
  torch::Tensor to_tensor() const;

 private:
  std::vector<Frame> frames_;
};

inline constexpr std::string_view kDefaultFramePattern = "im%d.png";

// 8-bit quantization used by every image writer: round(v * 255) with ties
// away from zero.
uint8_t to_byte(float v);
std::vector<uint8_t> frame_to_rgb8(const Frame& frame);
Frame frame_from_rgb8(const std::vector<uint8_t>& rgb, int64_t height, int64_t width);

void write_png(const std::filesystem::path& path, const std::vector<uint8_t>& rgb,
               int64_t height, int64_t width);
// Returns interleaved RGB8 and the image size. Non-RGB inputs are converted.
std::vector<uint8_t> read_png(const std::filesystem::path& path, int64_t* height,
                              int64_t* width);

// Loads frames whose names match `pattern` (a single %d placeholder), ordered
// by the numeric index. Indices must be contiguous starting at 1.
VideoClip load_clip(const std::filesystem::path& directory,
                    std::string_view pattern = kDefaultFramePattern);
void save_clip(const VideoClip& clip, const std::filesystem::path& directory,
               std::string_view pattern = kDefaultFramePattern);

std::string format_frame_name(std::string_view pattern, int64_t index);

}  // namespace plvc

#endif  // PLVC_FRAME_HPP_
