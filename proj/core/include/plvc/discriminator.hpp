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

#ifndef PLVC_DISCRIMINATOR_HPP_
#define PLVC_DISCRIMINATOR_HPP_

#include <torch/torch.h>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plvc/generator.hpp"
#include "plvc/layers.hpp"

namespace plvc {

enum class HiddenScope : uint8_t { kDOnly = 0, kGAndD = 1 };

std::string to_string(HiddenScope scope);
HiddenScope parse_hidden_scope(const std::string& s);

// Which conditions the discriminator sees and whether adversarial training
// happens at all. Ablations nest: dropping the spatial condition requires
// dropping motion, and dropping motion requires dropping the hidden state.
struct AblationConfig {
  bool use_hidden = true;
  HiddenScope hidden_scope = HiddenScope::kGAndD;
  bool use_motion_condition = true;
  bool use_spatial_condition = true;
  bool use_gan = true;

  void validate() const;
  // Generator recurrence is only removed when the hidden ablation covers G.
  bool generator_recurrent() const {
    return use_hidden || hidden_scope == HiddenScope::kDOnly;
  }
  // Frame pair (6) + spatial latents + motion (2).
  int64_t input_channels(int64_t latent_channels_total) const;
  std::string name() const;

  nlohmann::json to_json() const;
  static AblationConfig from_json(const nlohmann::json& j);
  bool operator==(const AblationConfig&) const = default;

  static AblationConfig full();
  static AblationConfig without_hidden(HiddenScope scope = HiddenScope::kGAndD);
  static AblationConfig without_hidden_motion(HiddenScope scope = HiddenScope::kGAndD);
  static AblationConfig without_hidden_motion_spatial(HiddenScope scope = HiddenScope::kGAndD);
};

// Conditions for one time step. Disabled components are left undefined.
struct ConditionBundle {
  torch::Tensor spatial;     // [B, C_m + C_r, H, W]
  torch::Tensor short_term;  // [B, 2, H, W]
};

using DiscriminatorState = LstmState;

// Nearest-neighbour upsampling of both latents by the generator's
// downsampling factor, plus the motion field, filtered by the ablation.
ConditionBundle build_condition(const LatentCode& latents, const torch::Tensor& motion,
                                const AblationConfig& ablation);

struct DiscriminatorOutput {
  torch::Tensor score;   // [B], in (0,1)
  torch::Tensor logits;  // [B,1,h,w] patch logits
  DiscriminatorState next;
};

/// Six spectrally normalized convolution stages (three stride-2 4x4 with
/// width, 2 width and 4 width channels, then three 3x3) with leaky ReLU, a spectral ConvLSTM after stage three when the
/// hidden state is enabled, and a sigmoid over the mean patch logit.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(const AblationConfig& ablation, int64_t latent_channels_total,
                    int64_t hidden_channels = 64, int64_t width = 64);

  DiscriminatorOutput forward(const torch::Tensor& current, const torch::Tensor& previous,
                              const ConditionBundle& cond, const DiscriminatorState& state);

  // One power-iteration step on every spectral layer (the D update calls it
  // once per step).
  void power_iteration(int iterations = 1);
  std::vector<SpectralConv2d> spectral_layers() const;

  const AblationConfig& ablation() const { return ablation_; }
  int64_t input_channels() const { return input_channels_; }

 private:
  AblationConfig ablation_;
  int64_t input_channels_;
  SpectralConv2d stage1_{nullptr}, stage2_{nullptr}, stage3_{nullptr}, stage4_{nullptr},
      stage5_{nullptr}, stage6_{nullptr};
  ConvLstm lstm_{nullptr};
};
TORCH_MODULE(Discriminator);

struct DiscriminatorStep {
  torch::Tensor current;
  torch::Tensor previous;
  ConditionBundle cond;
};

// Threads a fresh zero state through the steps; returns one [B] score each.
std::vector<torch::Tensor> rollout_discriminator(Discriminator& d,
                                                 const std::vector<DiscriminatorStep>& steps);

}  // namespace plvc

#endif  // PLVC_DISCRIMINATOR_HPP_
