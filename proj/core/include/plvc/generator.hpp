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

#ifndef PLVC_GENERATOR_HPP_
#define PLVC_GENERATOR_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "plvc/entropy_model.hpp"
#include "plvc/flow.hpp"
#include "plvc/layers.hpp"

namespace plvc {

// Four stride-2 stages in every auto-encoder.
inline constexpr int64_t kDownsampling = 16;

struct GeneratorConfig {
  int64_t channels = 64;
  int64_t latent_channels = 32;
  int64_t flow_levels = 4;
  int64_t flow_channels = 32;
  int64_t refine_channels = 32;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
  bool operator==(const GeneratorConfig&) const = default;
};

enum class BackboneId : uint8_t { kRecurrent = 0, kNonRecurrent = 1 };
enum class IntraMode : uint8_t { kIntraAe = 0, kLossless = 1 };

std::string to_string(BackboneId id);
std::string to_string(IntraMode mode);
IntraMode parse_intra_mode(const std::string& s);

// One (hidden, cell) pair per recurrent site of the generator.
struct RecurrentState {
  LstmState motion_encoder;
  LstmState motion_decoder;
  LstmState residual_encoder;
  LstmState residual_decoder;
  LstmState prior;

  RecurrentState detach() const;
  bool all_finite() const;
};

// Motion and residual latents, each [B, C, H/16, W/16]. Integer valued in
// test mode.
struct LatentCode {
  torch::Tensor motion;
  torch::Tensor residual;

  LatentCode detach() const { return {motion.detach(), residual.detach()}; }
};

struct FramePrior {
  CodingDistribution motion;
  CodingDistribution residual;
};

// Everything a P-frame chain carries from one frame to the next. The
// decoder holds exactly the same information.
struct ChainState {
  RecurrentState recurrent;
  LatentCode previous;

  ChainState detach() const { return {recurrent.detach(), previous.detach()}; }
};

struct GeneratorOutput {
  torch::Tensor reconstruction;  // x_hat, [B,3,H,W] in [0,1]
  torch::Tensor prediction;      // motion-compensated x_tilde
  torch::Tensor flow;            // encoder-side estimated motion m_i
  torch::Tensor decoded_motion;  // m_hat_i
  LatentCode latents;
  FramePrior prior;
  torch::Tensor motion_bits;     // [B]
  torch::Tensor residual_bits;   // [B]
  torch::Tensor estimated_bits;  // motion + residual, [B]
  ChainState next;
};

// Encoder: four stride-2 convolutions with GDN, optional ConvLSTM at the
// bottleneck, then a projection to the latent channels.
class AnalysisImpl : public torch::nn::Module {
 public:
  AnalysisImpl(int64_t in_channels, int64_t channels, int64_t latent_channels, bool with_lstm);
  torch::Tensor forward(const torch::Tensor& x, LstmState* state);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr}, conv4_{nullptr},
      project_{nullptr};
  Gdn gdn1_{nullptr}, gdn2_{nullptr}, gdn3_{nullptr};
  ConvLstm lstm_{nullptr};
};
TORCH_MODULE(Analysis);

// Decoder mirror of Analysis with inverse GDN.
class SynthesisImpl : public torch::nn::Module {
 public:
  SynthesisImpl(int64_t latent_channels, int64_t channels, int64_t out_channels, bool with_lstm);
  torch::Tensor forward(const torch::Tensor& y, LstmState* state);

 private:
  torch::nn::Conv2d expand_{nullptr};
  torch::nn::ConvTranspose2d up1_{nullptr}, up2_{nullptr}, up3_{nullptr}, up4_{nullptr};
  Gdn igdn1_{nullptr}, igdn2_{nullptr}, igdn3_{nullptr};
  ConvLstm lstm_{nullptr};
};
TORCH_MODULE(Synthesis);

// Recurrent probability model: maps the previous frame's latents (zeros at
// the start of a chain) and its own ConvLSTM state to the coding
// distributions of the current latents.
class PriorModelImpl : public torch::nn::Module {
 public:
  PriorModelImpl(int64_t latent_channels, int64_t channels);
  FramePrior forward(const LatentCode& previous, LstmState* state);

 private:
  int64_t latent_channels_;
  torch::nn::Conv2d input_{nullptr}, output_{nullptr};
  ConvLstm lstm_{nullptr};
};
TORCH_MODULE(PriorModel);

// warp(reference, motion) plus a residual refinement whose last layer starts
// at zero, so a fresh module reproduces the warped frame exactly.
class CompensationImpl : public torch::nn::Module {
 public:
  explicit CompensationImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& reference, const torch::Tensor& motion);

 private:
  torch::nn::Sequential refine_{nullptr};
};
TORCH_MODULE(Compensation);

/// The generator backbone. Subclasses provide the stages; the frame-level
/// composition (`forward`) and the decoder-side path used by the bitstream
/// decoder live here so every backbone shares one code path.
class BackboneImpl : public torch::nn::Module {
 public:
  virtual ~BackboneImpl() = default;

  virtual BackboneId id() const = 0;
  virtual const GeneratorConfig& config() const = 0;

  // Zero state and zero previous latents for a chain starting at an I-frame.
  virtual ChainState init_chain(int64_t batch, int64_t height, int64_t width,
                                const torch::TensorOptions& options) const = 0;

  virtual torch::Tensor estimate_motion(const torch::Tensor& current,
                                        const torch::Tensor& reference) = 0;
  virtual torch::Tensor encode_motion(const torch::Tensor& motion, LstmState* state) = 0;
  virtual torch::Tensor encode_residual(const torch::Tensor& residual, LstmState* state) = 0;

  // Entropy hook: distributions for the current frame from decoded history.
  virtual FramePrior prior(const LatentCode& previous, LstmState* state) = 0;
  virtual torch::Tensor decode_motion(const torch::Tensor& latent, LstmState* state) = 0;
  virtual torch::Tensor compensate(const torch::Tensor& reference, const torch::Tensor& motion) = 0;
  virtual torch::Tensor decode_residual(const torch::Tensor& latent, LstmState* state) = 0;

  // Full P-frame step: flow -> motion AE -> compensation -> residual AE.
  GeneratorOutput forward(const torch::Tensor& current, const torch::Tensor& reference,
                          const ChainState& chain, QuantMode mode);

  // Decoder side: rebuilds x_hat from integer latents and the chain state.
  torch::Tensor reconstruct(const LatentCode& latents, const torch::Tensor& reference,
                            ChainState* chain);
};

/// RLVC-style backbone. With `recurrent == false` every recurrent site runs
/// from a zero state on every frame and returns zeros, which turns it into a
/// frame-independent codec with the same parameter layout.
class RecurrentBackboneImpl : public BackboneImpl {
 public:
  RecurrentBackboneImpl(const GeneratorConfig& config, bool recurrent);

  BackboneId id() const override {
    return recurrent_ ? BackboneId::kRecurrent : BackboneId::kNonRecurrent;
  }
  const GeneratorConfig& config() const override { return config_; }

  ChainState init_chain(int64_t batch, int64_t height, int64_t width,
                        const torch::TensorOptions& options) const override;

  torch::Tensor estimate_motion(const torch::Tensor& current,
                                const torch::Tensor& reference) override;
  torch::Tensor encode_motion(const torch::Tensor& motion, LstmState* state) override;
  torch::Tensor encode_residual(const torch::Tensor& residual, LstmState* state) override;
  FramePrior prior(const LatentCode& previous, LstmState* state) override;
  torch::Tensor decode_motion(const torch::Tensor& latent, LstmState* state) override;
  torch::Tensor compensate(const torch::Tensor& reference, const torch::Tensor& motion) override;
  torch::Tensor decode_residual(const torch::Tensor& latent, LstmState* state) override;

  FlowNet flow_net() const { return flow_; }

 private:
  // Runs `fn` with the caller's state, or with a zero state that is
  // discarded when the backbone is not recurrent.
  template <typename Fn>
  auto with_state(LstmState* state, Fn&& fn);

  GeneratorConfig config_;
  bool recurrent_;
  FlowNet flow_{nullptr};
  Analysis motion_encoder_{nullptr}, residual_encoder_{nullptr};
  Synthesis motion_decoder_{nullptr}, residual_decoder_{nullptr};
  PriorModel prior_{nullptr};
  Compensation compensation_{nullptr};
};

using Backbone = std::shared_ptr<BackboneImpl>;

Backbone make_backbone(BackboneId id, const GeneratorConfig& config);

struct IntraOutput {
  torch::Tensor reconstruction;
  torch::Tensor latent;  // empty for lossless
  CodingDistribution dist;
  torch::Tensor bits;  // [B]
};

/// I-frame codec. intra_ae: auto-encoder with a factorized (per-channel
/// Gaussian) prior. lossless: 8-bit raw frame at 24 bits per pixel.
class IntraCodecImpl : public torch::nn::Module {
 public:
  IntraCodecImpl(const GeneratorConfig& config, IntraMode mode);

  IntraMode mode() const { return mode_; }
  IntraOutput forward(const torch::Tensor& x, QuantMode mode);

  torch::Tensor encode(const torch::Tensor& x);  // continuous latent
  torch::Tensor decode(const torch::Tensor& latent);
  CodingDistribution prior(const torch::IntArrayRef& latent_shape) const;

 private:
  IntraMode mode_;
  Analysis encoder_{nullptr};
  Synthesis decoder_{nullptr};
  torch::Tensor prior_mean_, prior_scale_raw_;
};
TORCH_MODULE(IntraCodec);

// round(x * 255) / 255 with ties away from zero.
torch::Tensor quantize_8bit(const torch::Tensor& x);

}  // namespace plvc

#endif  // PLVC_GENERATOR_HPP_
