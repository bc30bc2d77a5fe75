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

#include "plvc/entropy_model.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "plvc/error.hpp"

namespace plvc {

torch::Tensor quantize(const torch::Tensor& values, QuantMode mode) {
  if (!torch::isfinite(values).all().item<bool>()) {
    throw ModelError("quantize: non-finite input");
  }
  if (mode == QuantMode::kTest) {
    // "+ 0.0" turns -0.0 into +0.0 so decoded integer latents compare bitwise.
    return torch::sign(values) * torch::floor(values.abs() + 0.5) + 0.0;
  }
  return values + (torch::rand_like(values) - 0.5);
}

torch::Tensor clamp_to_symbol_range(const torch::Tensor& latent) {
  const auto clamped = latent.clamp(kSymbolMin, kSymbolMax);
  const int64_t clipped = (clamped != latent).sum().item<int64_t>();
  if (clipped > 0) {
    std::cerr << "{\"level\":\"warning\",\"event\":\"latent_clamped\",\"count\":" << clipped
              << "}\n";
  }
  return clamped;
}

namespace {

// Standard normal CDF via erfc; accurate on the lower tail.
torch::Tensor std_normal_cdf(const torch::Tensor& x) {
  return 0.5 * torch::erfc(-x * (1.0 / std::numbers::sqrt2));
}

}  // namespace

torch::Tensor bin_mass(const torch::Tensor& value, const CodingDistribution& dist) {
  if (value.sizes() != dist.mean.sizes() || value.sizes() != dist.scale.sizes()) {
    throw ModelError("bits estimate: latent and distribution shapes differ");
  }
  const auto scale = dist.scale.clamp_min(kScaleFloor);
  // The bin mass is symmetric about the mean, so evaluate on the lower side.
  const auto centered = -(value - dist.mean).abs();
  return std_normal_cdf((centered + 0.5) / scale) - std_normal_cdf((centered - 0.5) / scale);
}

torch::Tensor likelihood(const torch::Tensor& value, const CodingDistribution& dist) {
  return bin_mass(value, dist).clamp_min(kLikelihoodFloor);
}

torch::Tensor bits_estimate(const torch::Tensor& value, const CodingDistribution& dist) {
  const auto bits = -torch::log2(likelihood(value, dist));
  if (bits.dim() == 0) return bits;
  return bits.flatten(1).sum(1);
}

double bin_mass(double value, double mean, double scale) {
  scale = std::max(scale, kScaleFloor);
  const double centered = -std::abs(value - mean);
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  return cdf((centered + 0.5) / scale) - cdf((centered - 0.5) / scale);
}

}  // namespace plvc
