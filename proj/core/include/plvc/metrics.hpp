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

#ifndef PLVC_METRICS_HPP_
#define PLVC_METRICS_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "plvc/coding_plan.hpp"
#include "plvc/frame.hpp"

namespace plvc {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(1 / MSE) for [0,1] images, capped at kPsnrCap.
double psnr(const torch::Tensor& a, const torch::Tensor& b);
double psnr(const Frame& a, const Frame& b);

// Multi-scale SSIM (Gaussian window 11, sigma 1.5, K1 0.01, K2 0.03, 2x2
// average pooling between scales). Five scales when min(H, W) >= 160,
// otherwise three scales with renormalized weights; smaller than 44 px is an
// error. Computed per channel and averaged.
double ms_ssim(const torch::Tensor& a, const torch::Tensor& b);
double ms_ssim(const Frame& a, const Frame& b);
int ms_ssim_scales(int64_t height, int64_t width);

/// Maps image batches [B,3,H,W] to per-layer feature maps and to a pooled
/// feature vector of fixed dimension.
class FeatureEmbedder {
 public:
  virtual ~FeatureEmbedder() = default;
  virtual std::string identifier() const = 0;
  virtual int64_t feature_dim() const = 0;
  virtual std::vector<torch::Tensor> layers(const torch::Tensor& images) const = 0;
  // [B, feature_dim]: global average pool of the last layer.
  torch::Tensor embed(const torch::Tensor& images) const;
};

// Three fixed random 3x3 convolution layers (16, 32, 64 channels; strides
// 1, 2, 2; ReLU) drawn from a private generator seeded with `seed`.
class RandomConvEmbedder : public FeatureEmbedder {
 public:
  explicit RandomConvEmbedder(uint64_t seed = 0);
  std::string identifier() const override;
  int64_t feature_dim() const override { return 64; }
  std::vector<torch::Tensor> layers(const torch::Tensor& images) const override;

 private:
  uint64_t seed_;
  std::vector<torch::Tensor> weights_, biases_;
};

// Sum over layers of the spatial mean of the squared difference between
// channel-normalized features. Per batch element ([B]).
torch::Tensor lpips_like(const torch::Tensor& a, const torch::Tensor& b,
                         const FeatureEmbedder& embedder);
double lpips_like(const Frame& a, const Frame& b, const FeatureEmbedder& embedder);

// Frechet distance between Gaussian fits of two feature sets [N, F]. The
// sample covariances receive 1e-6 I shrinkage; the result is clamped at 0.
double fid(const torch::Tensor& features_a, const torch::Tensor& features_b);
// Frechet distance from supplied statistics (no shrinkage).
double fid_from_stats(const torch::Tensor& mean_a, const torch::Tensor& cov_a,
                      const torch::Tensor& mean_b, const torch::Tensor& cov_b);

// Unbiased MMD^2 with kernel (x.y / F + 1)^3. Equal-size sets use the paired
// U-statistic over i != j; unequal sizes use the unpaired unbiased form.
double mmd2_unbiased(const torch::Tensor& features_a, const torch::Tensor& features_b);
// Mean of mmd2_unbiased over consecutive disjoint blocks of about
// `block_size` samples (a single block when the sets are smaller).
double kid(const torch::Tensor& features_a, const torch::Tensor& features_b,
           int64_t block_size = 1000);

// Row `row` of every frame stacked over time: [3, T, W].
torch::Tensor temporal_profile(const VideoClip& clip, int64_t row);

struct PositionStats {
  std::vector<double> mean;    // index k-1 holds P-frame offset k
  std::vector<int64_t> count;
};

// Averages per-frame values by P-frame offset from the GOP's I-frame, over
// every complete GOP of every sequence. `values[s][f]` belongs to frame f
// of sequence s.
PositionStats per_position_stats(const std::vector<std::vector<double>>& values,
                                 const std::vector<CodingPlan>& plans);

}  // namespace plvc

#endif  // PLVC_METRICS_HPP_
