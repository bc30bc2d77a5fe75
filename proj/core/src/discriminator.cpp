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

#include "plvc/discriminator.hpp"

#include "plvc/error.hpp"

namespace plvc {
namespace F = torch::nn::functional;

std::string to_string(HiddenScope scope) {
  return scope == HiddenScope::kDOnly ? "d_only" : "g_and_d";
}

HiddenScope parse_hidden_scope(const std::string& s) {
  if (s == "d_only") return HiddenScope::kDOnly;
  if (s == "g_and_d") return HiddenScope::kGAndD;
  throw ConfigError("unknown hidden scope: " + s + " (expected d_only or g_and_d)");
}

void AblationConfig::validate() const {
  if (!use_spatial_condition && use_motion_condition) {
    throw ConfigError("ablation no_spatial_cond requires no_motion_cond");
  }
  if (!use_motion_condition && use_hidden) {
    throw ConfigError("ablation no_motion_cond requires no_hidden");
  }
}

int64_t AblationConfig::input_channels(int64_t latent_channels_total) const {
  return 6 + (use_spatial_condition ? latent_channels_total : 0) + (use_motion_condition ? 2 : 0);
}

std::string AblationConfig::name() const {
  if (!use_gan) return "no_gan";
  if (!use_spatial_condition) return "no_hidden_motion_spatial";
  if (!use_motion_condition) return "no_hidden_motion";
  if (!use_hidden) return "no_hidden";
  return "full";
}

nlohmann::json AblationConfig::to_json() const {
  return {{"use_hidden", use_hidden},
          {"hidden_scope", to_string(hidden_scope)},
          {"use_motion_condition", use_motion_condition},
          {"use_spatial_condition", use_spatial_condition},
          {"use_gan", use_gan}};
}

AblationConfig AblationConfig::from_json(const nlohmann::json& j) {
  AblationConfig a;
  a.use_hidden = j.at("use_hidden").get<bool>();
  a.hidden_scope = parse_hidden_scope(j.at("hidden_scope").get<std::string>());
  a.use_motion_condition = j.at("use_motion_condition").get<bool>();
  a.use_spatial_condition = j.at("use_spatial_condition").get<bool>();
  a.use_gan = j.at("use_gan").get<bool>();
  a.validate();
  return a;
}

AblationConfig AblationConfig::full() { return {}; }

AblationConfig AblationConfig::without_hidden(HiddenScope scope) {
  AblationConfig a;
  a.use_hidden = false;
  a.hidden_scope = scope;
  return a;
}

AblationConfig AblationConfig::without_hidden_motion(HiddenScope scope) {
  auto a = without_hidden(scope);
  a.use_motion_condition = false;
  return a;
}

AblationConfig AblationConfig::without_hidden_motion_spatial(HiddenScope scope) {
  auto a = without_hidden_motion(scope);
  a.use_spatial_condition = false;
  return a;
}

ConditionBundle build_condition(const LatentCode& latents, const torch::Tensor& motion,
                                const AblationConfig& ablation) {
  ConditionBundle cond;
  if (ablation.use_spatial_condition) {
    const auto& m = latents.motion;
    const auto& r = latents.residual;
    if (m.dim() != 4 || r.dim() != 4 || m.size(0) != r.size(0) || m.size(2) != r.size(2) ||
        m.size(3) != r.size(3)) {
      throw ModelError("build_condition: latent grids differ in shape");
    }
    const auto y = torch::cat({latents.motion, latents.residual}, 1);
    cond.spatial = F::interpolate(y, F::InterpolateFuncOptions()
                                         .scale_factor(std::vector<double>{kDownsampling, kDownsampling})
                                         .mode(torch::kNearest));
    if (motion.defined() && (cond.spatial.size(2) != motion.size(2) ||
                             cond.spatial.size(3) != motion.size(3))) {
      throw ModelError("build_condition: latent and motion grids disagree");
    }
  }
  if (ablation.use_motion_condition) {
    if (!motion.defined() || motion.dim() != 4 || motion.size(1) != 2) {
      throw ModelError("build_condition: motion must be [B,2,H,W]");
    }
    cond.short_term = motion;
  }
  return cond;
}

namespace {

SpectralConv2d down4(int64_t in, int64_t out) { return SpectralConv2d(in, out, 4, 2, 1); }
SpectralConv2d same3(int64_t in, int64_t out) { return SpectralConv2d(in, out, 3, 1, 1); }

torch::Tensor leaky(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
}

}  // namespace

DiscriminatorImpl::DiscriminatorImpl(const AblationConfig& ablation, int64_t latent_channels_total,
                                     int64_t hidden_channels, int64_t width)
    : ablation_(ablation), input_channels_(ablation.input_channels(latent_channels_total)) {
  ablation_.validate();
  if (hidden_channels < 1 || width < 1) throw ModelError("discriminator: widths must be positive");
  stage1_ = register_module("stage1", down4(input_channels_, width));
  stage2_ = register_module("stage2", down4(width, 2 * width));
  stage3_ = register_module("stage3", down4(2 * width, 4 * width));
  int64_t mid = 4 * width;
  if (ablation_.use_hidden) {
    lstm_ = register_module("lstm", ConvLstm(4 * width, hidden_channels, 3, true));
    mid = hidden_channels;
  }
  stage4_ = register_module("stage4", same3(mid, 4 * width));
  stage5_ = register_module("stage5", same3(4 * width, 4 * width));
  stage6_ = register_module("stage6", same3(4 * width, 1));
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& current,
                                               const torch::Tensor& previous,
                                               const ConditionBundle& cond,
                                               const DiscriminatorState& state) {
  if (current.sizes() != previous.sizes() || current.dim() != 4 || current.size(1) != 3) {
    throw ModelError("discriminator: frame pair must be two [B,3,H,W] tensors");
  }
  if (cond.spatial.defined() != ablation_.use_spatial_condition ||
      cond.short_term.defined() != ablation_.use_motion_condition) {
    throw ModelError("discriminator: condition bundle does not match the ablation config");
  }
  std::vector<torch::Tensor> parts{current, previous};
  if (cond.spatial.defined()) parts.push_back(cond.spatial);
  if (cond.short_term.defined()) parts.push_back(cond.short_term);
  const auto input = torch::cat(parts, 1);
  if (input.size(1) != input_channels_) {
    throw ModelError("discriminator: expected " + std::to_string(input_channels_) +
                     " input channels, got " + std::to_string(input.size(1)));
  }
  auto h = leaky(stage1_->forward(input));
  h = leaky(stage2_->forward(h));
  h = leaky(stage3_->forward(h));
  DiscriminatorOutput out;
  if (lstm_) {
    out.next = lstm_->forward(h, state);
    h = out.next.hidden;
  } else {
    out.next = state;
  }
  h = leaky(stage4_->forward(h));
  h = leaky(stage5_->forward(h));
  out.logits = stage6_->forward(h);
  out.score = torch::sigmoid(out.logits.mean({1, 2, 3}));
  return out;
}

void DiscriminatorImpl::power_iteration(int iterations) {
  for (auto& layer : spectral_layers()) layer->power_iteration(iterations);
}

std::vector<SpectralConv2d> DiscriminatorImpl::spectral_layers() const {
  std::vector<SpectralConv2d> layers{stage1_, stage2_, stage3_, stage4_, stage5_, stage6_};
  if (lstm_) layers.push_back(lstm_->spectral_gates());
  return layers;
}

std::vector<torch::Tensor> rollout_discriminator(Discriminator& d,
                                                 const std::vector<DiscriminatorStep>& steps) {
  std::vector<torch::Tensor> scores;
  scores.reserve(steps.size());
  DiscriminatorState state;
  for (const auto& step : steps) {
    auto out = d->forward(step.current, step.previous, step.cond, state);
    scores.push_back(out.score);
    state = out.next;
  }
  return scores;
}

}  // namespace plvc
