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

#ifndef PLVC_TRAINING_HPP_
#define PLVC_TRAINING_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plvc/model.hpp"
#include "plvc/preset.hpp"

namespace plvc {

// Rate and distortion of one P-frame, batch-averaged scalar tensors.
struct FrameTerms {
  torch::Tensor bpp;
  torch::Tensor mse;
};

// sum_i R_i + lambda * MSE_i
torch::Tensor warmup_loss(const std::vector<FrameTerms>& frames, double lambda);
double warmup_loss(const std::vector<double>& bpp, const std::vector<double>& mse, double lambda);

// sum_i [-log(1 - D(fake_i)) - log D(real_i)], batch-averaged per step. Log
// arguments are clamped at 1e-12; scores must lie in [0, 1].
torch::Tensor d_loss(const std::vector<torch::Tensor>& real, const std::vector<torch::Tensor>& fake);
double d_loss(const std::vector<double>& real, const std::vector<double>& fake);

// sum_i [alpha R_i + lambda' MSE_i - beta log D(fake_i)].
torch::Tensor g_loss(const std::vector<FrameTerms>& frames, const std::vector<torch::Tensor>& fake,
                     double alpha, double lambda_prime, double beta);
double g_loss(const std::vector<double>& bpp, const std::vector<double>& mse,
              const std::vector<double>& fake, double alpha, double lambda_prime, double beta);

enum class TrainPhase { kWarmup, kAdversarial, kRateTargeted };
std::string to_string(TrainPhase phase);
TrainPhase parse_train_phase(const std::string& s);

struct TrainConfig {
  TrainPhase phase = TrainPhase::kWarmup;
  PresetId preset = PresetId::kMedium;
  int64_t steps = 200;
  int64_t batch = 4;
  int64_t rollout = 6;  // N P-frames after the I-frame
  double lr_warmup = 1e-4;
  double lr_generator = 1e-4;
  double lr_discriminator = 1e-4;
  double lr_decay_fraction = 0.2;  // final share of steps at lr * 0.1
  double grad_clip = 10.0;
  int64_t flow_pretrain_steps = 0;  // warm-up only: photometric flow steps first
  uint64_t seed = 1;
  double rate_scale = 1.0;
  AblationConfig ablation;
  std::filesystem::path out_dir;
  int64_t checkpoint_every = 0;  // 0: final checkpoint only
  int64_t log_every = 0;         // 0: silent

  void validate(int64_t frames_per_clip) const;
  nlohmann::json to_json() const;
};

struct LossRecord {
  int64_t step = 0;
  std::string phase;
  std::optional<double> loss_w;
  std::optional<double> loss_d;
  std::optional<double> loss_g;
  double bpp = 0.0;  // batch-mean P-frame bpp over the rollout
  double mse = 0.0;  // batch-mean P-frame MSE over the rollout
  std::optional<double> adversarial;  // -beta * sum log D(fake)
  std::optional<double> alpha;
  std::optional<double> d_accuracy;  // training-batch accuracy of D
  double lr = 0.0;
};

class LossReport {
 public:
  void add(const LossRecord& r) { records_.push_back(r); }
  const std::vector<LossRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  static std::string csv_header();
  static std::string csv_row(const LossRecord& r);
  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json summary() const;

 private:
  std::vector<LossRecord> records_;
};

// Running-mean loss improved by less than 1% over the last 10% of steps.
bool warmup_converged(const std::vector<double>& losses);

/// Owns the optimizers and step counter for one phase. Every step reseeds
/// the torch generator and the batch sampler from (seed, step), so a
/// resumed run repeats the uninterrupted one.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);

  // Runs one step of the configured phase on clips sampled from `data`
  // ([clips, T, 3, H, W]).
  LossRecord step(const torch::Tensor& data);
  // Runs until config.steps, writing CSV/summary and checkpoints into
  // config.out_dir (when set). Returns the path of the final checkpoint.
  std::filesystem::path run(const torch::Tensor& data,
                            const std::function<void(const LossRecord&)>& on_step = {});

  int64_t step_index() const { return step_; }
  const LossReport& report() const { return report_; }
  const TrainConfig& config() const { return config_; }
  Model& model() { return model_; }

  // Called with "after_d" / "after_g" between the two halves of an
  // adversarial step.
  void set_stage_hook(std::function<void(const std::string&)> hook) { hook_ = std::move(hook); }

  void save(const std::filesystem::path& path);
  // Restores optimizer states and the step counter written by save().
  void resume(const std::filesystem::path& path);

 private:
  LossRecord flow_step(const torch::Tensor& batch);
  LossRecord warmup_step(const torch::Tensor& batch);
  LossRecord adversarial_step(const torch::Tensor& batch, bool use_discriminator);
  double current_lr(double base) const;
  void set_lr(torch::optim::Optimizer& opt, double lr);
  void check_finite(const torch::Tensor& loss, const char* what);

  Model& model_;
  TrainConfig config_;
  int64_t step_ = 0;
  std::unique_ptr<torch::optim::Adam> flow_opt_;
  std::unique_ptr<torch::optim::Adam> gen_opt_;
  std::unique_ptr<torch::optim::Adam> disc_opt_;
  LossReport report_;
  std::function<void(const std::string&)> hook_;
};

// Batch of clip indices for a step; pure function of (seed, step).
std::vector<int64_t> sample_batch(uint64_t seed, int64_t step, int64_t clip_count, int64_t batch);

/// Test-mode rollout over clip[0..rollout]: intra-coded first frame, then
/// P-frames chained forward.
struct RolloutResult {
  std::vector<torch::Tensor> reconstructions;  // [B,3,H,W], index 0 is the I-frame
  std::vector<torch::Tensor> flows;            // encoder-side m_i, i = 1..N
  std::vector<LatentCode> latents;
  std::vector<torch::Tensor> p_bpp;  // [B] per P-frame
  std::vector<torch::Tensor> p_mse;  // [B] per P-frame
  torch::Tensor intra_bpp;           // [B]
  torch::Tensor intra_mse;           // [B]
};
// `intra_mode` controls the I-frame quantizer; the I-frame reconstruction is
// always detached before it serves as a reference.
RolloutResult rollout(Model& model, const torch::Tensor& clips, int64_t frames, QuantMode mode,
                      QuantMode intra_mode);

// Fraction of correct raw/reconstructed decisions (threshold 0.5) of the
// discriminator over test-mode rollouts of `clips`.
double discriminator_accuracy(Model& model, const torch::Tensor& clips, int64_t frames);

}  // namespace plvc

#endif  // PLVC_TRAINING_HPP_
