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

#ifndef PLVC_FLOW_HPP_
#define PLVC_FLOW_HPP_

#include <torch/torch.h>

#include <filesystem>
#include <vector>

#include "plvc/frame.hpp"

namespace plvc {

// Dense displacement field, [2, H, W] with channel 0 horizontal and channel 1
// vertical, in pixels. Sampling convention: reference(p + m(p)) ~ current(p).
class MotionField {
 public:
  MotionField() = default;
  explicit MotionField(torch::Tensor vectors);

  int64_t height() const { return vectors_.size(1); }
  int64_t width() const { return vectors_.size(2); }
  const torch::Tensor& vectors() const { return vectors_; }

 private:
  torch::Tensor vectors_;
};

// Backward bilinear warp with edge clamping:
//   out[b,c,y,x] = bilinear(image[b,c], x + flow[b,0,y,x], y + flow[b,1,y,x]).
// image is [B,C,H,W], flow is [B,2,H,W]; differentiable in both arguments.
torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& flow);
Frame warp(const Frame& reference, const MotionField& flow);

// Coarse-to-fine flow estimator. At the coarsest scale the flow starts at
// zero; every finer level upsamples x2, warps the reference and adds a
// residual predicted by a small convolutional refiner.
class FlowNetImpl : public torch::nn::Module {
 public:
  explicit FlowNetImpl(int64_t levels = 4, int64_t channels = 32);

  // current, reference: [B,3,H,W]; returns [B,2,H,W].
  torch::Tensor forward(const torch::Tensor& current, const torch::Tensor& reference);

  int64_t levels() const { return levels_; }

 private:
  int64_t levels_;
  std::vector<torch::nn::Sequential> refiners_;
};
TORCH_MODULE(FlowNet);

MotionField estimate_flow(FlowNet& net, const Frame& current, const Frame& reference);

// Debug format: u16 H, u16 W, then H*W*2 little-endian float32, channel-last.
void write_motion_field(const std::filesystem::path& path, const MotionField& m);
MotionField read_motion_field(const std::filesystem::path& path);

}  // namespace plvc

#endif  // PLVC_FLOW_HPP_
