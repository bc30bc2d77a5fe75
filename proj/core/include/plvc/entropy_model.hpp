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

#ifndef PLVC_ENTROPY_MODEL_HPP_
#define PLVC_ENTROPY_MODEL_HPP_

#include <torch/torch.h>

namespace plvc {

enum class QuantMode { kTrain, kTest };

inline constexpr double kScaleFloor = 1e-6;
inline constexpr double kLikelihoodFloor = 1.0 / 65536.0;  // 2^-16
inline constexpr int kSymbolMin = -128;
inline constexpr int kSymbolMax = 127;

// Per-element Gaussian over integer bins. `scale` is floored at kScaleFloor.
struct CodingDistribution {
  torch::Tensor mean;
  torch::Tensor scale;

  CodingDistribution detach() const { return {mean.detach(), scale.detach()}; }
};

// test: round half away from zero. train: additive U[-0.5, 0.5) noise drawn
// from the global torch generator; gradients pass straight through.
torch::Tensor quantize(const torch::Tensor& values, QuantMode mode);

// Clamps test-mode latents into the coder's symbol range, warning once per
// call when anything had to be clipped.
torch::Tensor clamp_to_symbol_range(const torch::Tensor& latent);

// Mass of the unit bin centred at `value`: Phi((v+.5-mu)/s) - Phi((v-.5-mu)/s),
// evaluated on the lower tail for accuracy. No floor applied.
torch::Tensor bin_mass(const torch::Tensor& value, const CodingDistribution& dist);

// bin_mass clamped below at kLikelihoodFloor.
torch::Tensor likelihood(const torch::Tensor& value, const CodingDistribution& dist);

// -sum(log2 likelihood) over all dimensions except the first: one bit count
// per batch element ([B]).
torch::Tensor bits_estimate(const torch::Tensor& value, const CodingDistribution& dist);

// Scalar convenience for double-precision checks.
double bin_mass(double value, double mean, double scale);

}  // namespace plvc

#endif  // PLVC_ENTROPY_MODEL_HPP_
