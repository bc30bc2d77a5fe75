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

#include "test_support.hpp"

#include <stdlib.h>

#include <cmath>
#include <cstring>

#include "plvc/dataset.hpp"
#include "plvc/error.hpp"

namespace plvc::testing {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "plvc_test_XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw IoError("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

ModelConfig small_config(int64_t size) {
  ModelConfig c;
  c.width = size;
  c.height = size;
  c.generator.channels = 16;
  c.generator.latent_channels = 8;
  c.generator.flow_channels = 8;
  c.generator.refine_channels = 8;
  c.discriminator_hidden = 8;
  c.discriminator_width = 8;
  return c;
}

VideoClip synthetic_clip(int64_t frames, int64_t size, uint64_t seed) {
  DatasetSpec spec;
  spec.clip_count = 1;
  spec.frames_per_clip = frames;
  spec.frame_size = size;
  spec.seed = seed;
  return render_clip(spec, 0).clip;
}

torch::Tensor toy_dataset(int64_t clips, int64_t frames, int64_t size, uint64_t seed) {
  DatasetSpec spec;
  spec.clip_count = clips;
  spec.frames_per_clip = frames;
  spec.frame_size = size;
  spec.seed = seed;
  std::vector<torch::Tensor> all;
  for (int64_t i = 0; i < clips; ++i) all.push_back(render_clip(spec, i).clip.to_tensor());
  return torch::stack(all);
}

torch::Tensor random_image(int64_t height, int64_t width, uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return torch::rand({3, height, width}, gen);
}

CdfTable random_table(std::mt19937_64& rng, int32_t lo, size_t n) {
  std::vector<double> weights(n);
  const int shape = static_cast<int>(rng() % 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& w : weights) w = u(rng);
  if (shape == 1) weights[rng() % n] += 50.0 * static_cast<double>(n);
  if (shape == 2) {
    for (auto& w : weights) w = w < 0.5 ? 0.0 : w;
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<uint32_t> freqs(n, 1);
  const uint32_t spare = kCdfTotal - static_cast<uint32_t>(n);
  uint32_t used = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto extra = sum > 0.0 ? static_cast<uint32_t>(std::floor(weights[i] / sum * spare)) : 0u;
    freqs[i] += extra;
    used += extra;
  }
  freqs[rng() % n] += spare - used;
  return make_table(lo, freqs);
}

bool bit_equal(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes() || a.scalar_type() != b.scalar_type()) return false;
  const auto x = a.contiguous();
  const auto y = b.contiguous();
  return std::memcmp(x.data_ptr(), y.data_ptr(), x.numel() * x.element_size()) == 0;
}

}  // namespace plvc::testing
