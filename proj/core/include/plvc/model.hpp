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

#ifndef PLVC_MODEL_HPP_
#define PLVC_MODEL_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plvc/discriminator.hpp"
#include "plvc/generator.hpp"
#include "plvc/preset.hpp"

namespace plvc {

// Evaluation precision recorded in bitstream headers.
inline constexpr uint8_t kPrecisionFp32 = 1;

struct ModelConfig {
  int64_t width = 64;
  int64_t height = 64;
  GeneratorConfig generator;
  PresetId preset = PresetId::kMedium;
  AblationConfig ablation;
  BackboneId backbone = BackboneId::kRecurrent;
  IntraMode intra_mode = IntraMode::kIntraAe;
  int64_t discriminator_hidden = 64;
  int64_t discriminator_width = 64;
  uint8_t precision_tag = kPrecisionFp32;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

// Backbone implied by an ablation: the hidden-state ablation with g_and_d
// scope removes generator recurrence as well.
BackboneId backbone_for(const AblationConfig& ablation);

/// Generator (backbone + intra codec) and discriminator sharing one config.
struct Model {
  explicit Model(const ModelConfig& config);

  ModelConfig config;
  Backbone backbone;
  IntraCodec intra{nullptr};
  Discriminator discriminator{nullptr};

  void train(bool on = true);
  void eval() { train(false); }
};

struct CheckpointInfo {
  std::string phase;  // warmup, adversarial, rate_targeted, ...
  int64_t step = 0;
  nlohmann::json extra = nlohmann::json::object();
};

// Optimizers to persist alongside the parameters; null entries are skipped.
struct OptimizerRefs {
  torch::optim::Optimizer* generator = nullptr;
  torch::optim::Optimizer* discriminator = nullptr;
  torch::optim::Optimizer* flow = nullptr;
};

void save_checkpoint(const std::filesystem::path& path, Model& model, const CheckpointInfo& info,
                     const OptimizerRefs& optimizers = {});
// Rebuilds the model from the stored config and loads every parameter.
Model load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);
// Restores the optimizer states stored by save_checkpoint.
void load_optimizer_states(const std::filesystem::path& path, const OptimizerRefs& optimizers);
ModelConfig read_checkpoint_config(const std::filesystem::path& path);

std::string checkpoint_name(const std::string& phase, int64_t step);

// SHA-256 over the named parameter and buffer bytes, for change detection.
std::string parameter_hash(const torch::nn::Module& module);

}  // namespace plvc

#endif  // PLVC_MODEL_HPP_
