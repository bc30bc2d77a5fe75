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

#include "plvc/generator.hpp"

#include "plvc/error.hpp"

namespace plvc {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

nlohmann::json GeneratorConfig::to_json() const {
  return {{"channels", channels},
          {"latent_channels", latent_channels},
          {"flow_levels", flow_levels},
          {"flow_channels", flow_channels},
          {"refine_channels", refine_channels},
          {"downsampling", kDownsampling}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  c.channels = j.at("channels").get<int64_t>();
  c.latent_channels = j.at("latent_channels").get<int64_t>();
  c.flow_levels = j.at("flow_levels").get<int64_t>();
  c.flow_channels = j.at("flow_channels").get<int64_t>();
  c.refine_channels = j.at("refine_channels").get<int64_t>();
  if (j.value("downsampling", kDownsampling) != kDownsampling) {
    throw ConfigError("checkpoint uses an unsupported downsampling factor");
  }
  return c;
}

std::string to_string(BackboneId id) {
  return id == BackboneId::kRecurrent ? "recurrent" : "non_recurrent";
}

std::string to_string(IntraMode mode) {
  return mode == IntraMode::kIntraAe ? "intra_ae" : "lossless";
}

IntraMode parse_intra_mode(const std::string& s) {
  if (s == "intra_ae") return IntraMode::kIntraAe;
  if (s == "lossless") return IntraMode::kLossless;
  throw ConfigError("unknown intra mode: " + s);
}

RecurrentState RecurrentState::detach() const {
  return {motion_encoder.detach(), motion_decoder.detach(), residual_encoder.detach(),
          residual_decoder.detach(), prior.detach()};
}

bool RecurrentState::all_finite() const {
  for (const auto* s : {&motion_encoder, &motion_decoder, &residual_encoder, &residual_decoder, &prior}) {
    if (!s->defined()) continue;
    if (!torch::isfinite(s->hidden).all().item<bool>() || !torch::isfinite(s->cell).all().item<bool>()) {
      return false;
    }
  }
  return true;
}

namespace {

nn::Conv2d down(int64_t in, int64_t out) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(2).padding(1));
}

nn::ConvTranspose2d up(int64_t in, int64_t out) {
  return nn::ConvTranspose2d(
      nn::ConvTranspose2dOptions(in, out, 3).stride(2).padding(1).output_padding(1));
}

nn::Conv2d same(int64_t in, int64_t out) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1));
}

torch::Tensor run_lstm(ConvLstm& lstm, const torch::Tensor& x, LstmState* state) {
  auto next = lstm->forward(x, state ? *state : LstmState{});
  if (state) *state = next;
  return next.hidden;
}

}  // namespace

AnalysisImpl::AnalysisImpl(int64_t in_channels, int64_t channels, int64_t latent_channels,
                           bool with_lstm) {
  conv1_ = register_module("conv1", down(in_channels, channels));
  gdn1_ = register_module("gdn1", Gdn(channels, false));
  conv2_ = register_module("conv2", down(channels, channels));
  gdn2_ = register_module("gdn2", Gdn(channels, false));
  conv3_ = register_module("conv3", down(channels, channels));
  gdn3_ = register_module("gdn3", Gdn(channels, false));
  conv4_ = register_module("conv4", down(channels, channels));
  if (with_lstm) lstm_ = register_module("lstm", ConvLstm(channels, channels));
  project_ = register_module("project", same(channels, latent_channels));
}

torch::Tensor AnalysisImpl::forward(const torch::Tensor& x, LstmState* state) {
  auto h = gdn1_->forward(conv1_->forward(x));
  h = gdn2_->forward(conv2_->forward(h));
  h = gdn3_->forward(conv3_->forward(h));
  h = conv4_->forward(h);
  if (lstm_) h = run_lstm(lstm_, h, state);
  return project_->forward(h);
}

SynthesisImpl::SynthesisImpl(int64_t latent_channels, int64_t channels, int64_t out_channels,
                             bool with_lstm) {
  expand_ = register_module("expand", same(latent_channels, channels));
  if (with_lstm) lstm_ = register_module("lstm", ConvLstm(channels, channels));
  up1_ = register_module("up1", up(channels, channels));
  igdn1_ = register_module("igdn1", Gdn(channels, true));
  up2_ = register_module("up2", up(channels, channels));
  igdn2_ = register_module("igdn2", Gdn(channels, true));
  up3_ = register_module("up3", up(channels, channels));
  igdn3_ = register_module("igdn3", Gdn(channels, true));
  up4_ = register_module("up4", up(channels, out_channels));
}

torch::Tensor SynthesisImpl::forward(const torch::Tensor& y, LstmState* state) {
  auto h = expand_->forward(y);
  if (lstm_) h = run_lstm(lstm_, h, state);
  h = igdn1_->forward(up1_->forward(h));
  h = igdn2_->forward(up2_->forward(h));
  h = igdn3_->forward(up3_->forward(h));
  return up4_->forward(h);
}

PriorModelImpl::PriorModelImpl(int64_t latent_channels, int64_t channels)
    : latent_channels_(latent_channels) {
  input_ = register_module("input", same(2 * latent_channels, channels));
  lstm_ = register_module("lstm", ConvLstm(channels, channels));
  output_ = register_module("output", same(channels, 4 * latent_channels));
}

FramePrior PriorModelImpl::forward(const LatentCode& previous, LstmState* state) {
  auto h = torch::relu(input_->forward(torch::cat({previous.motion, previous.residual}, 1)));
  h = run_lstm(lstm_, h, state);
  const auto params = output_->forward(h);
  const auto parts = params.split(latent_channels_, 1);
  auto scale = [](const torch::Tensor& raw) {
    return F::softplus(raw).clamp_min(kScaleFloor);
  };
  return {{parts[0], scale(parts[2])}, {parts[1], scale(parts[3])}};
}

CompensationImpl::CompensationImpl(int64_t channels) {
  auto last = same(channels, 3);
  {
    torch::NoGradGuard no_grad;
    last->weight.zero_();
    last->bias.zero_();
  }
  refine_ = register_module("refine", nn::Sequential(same(8, channels), nn::ReLU(),
                                                      same(channels, channels), nn::ReLU(), last));
}

torch::Tensor CompensationImpl::forward(const torch::Tensor& reference, const torch::Tensor& motion) {
  const auto warped = warp(reference, motion);
  const auto correction = refine_->forward(torch::cat({warped - 0.5, reference - 0.5, motion}, 1));
  return (warped + correction).clamp(0.0, 1.0);
}

GeneratorOutput BackboneImpl::forward(const torch::Tensor& current, const torch::Tensor& reference,
                                      const ChainState& chain, QuantMode mode) {
  if (current.sizes() != reference.sizes() || current.dim() != 4 || current.size(1) != 3) {
    throw ModelError("generator: current and reference frames must both be [B,3,H,W]");
  }
  if (current.size(2) % kDownsampling != 0 || current.size(3) % kDownsampling != 0) {
    throw ConfigError("generator: frame size must be divisible by " + std::to_string(kDownsampling));
  }
  GeneratorOutput out;
  out.next = chain;
  auto& state = out.next.recurrent;

  out.prior = prior(chain.previous, &state.prior);

  out.flow = estimate_motion(current, reference);
  auto y_motion = quantize(encode_motion(out.flow, &state.motion_encoder), mode);
  if (mode == QuantMode::kTest) y_motion = clamp_to_symbol_range(y_motion);
  out.decoded_motion = decode_motion(y_motion, &state.motion_decoder);
  out.prediction = compensate(reference, out.decoded_motion);

  auto y_residual =
      quantize(encode_residual(current - out.prediction, &state.residual_encoder), mode);
  if (mode == QuantMode::kTest) y_residual = clamp_to_symbol_range(y_residual);
  const auto residual = decode_residual(y_residual, &state.residual_decoder);
  out.reconstruction = (out.prediction + residual).clamp(0.0, 1.0);

  out.latents = {y_motion, y_residual};
  out.next.previous = out.latents;
  out.motion_bits = bits_estimate(y_motion, out.prior.motion);
  out.residual_bits = bits_estimate(y_residual, out.prior.residual);
  out.estimated_bits = out.motion_bits + out.residual_bits;
  return out;
}

torch::Tensor BackboneImpl::reconstruct(const LatentCode& latents, const torch::Tensor& reference,
                                        ChainState* chain) {
  auto& state = chain->recurrent;
  const auto motion = decode_motion(latents.motion, &state.motion_decoder);
  const auto prediction = compensate(reference, motion);
  const auto residual = decode_residual(latents.residual, &state.residual_decoder);
  chain->previous = latents;
  return (prediction + residual).clamp(0.0, 1.0);
}

RecurrentBackboneImpl::RecurrentBackboneImpl(const GeneratorConfig& config, bool recurrent)
    : config_(config), recurrent_(recurrent) {
  const auto ch = config.channels, lat = config.latent_channels;
  flow_ = register_module("flow", FlowNet(config.flow_levels, config.flow_channels));
  motion_encoder_ = register_module("motion_encoder", Analysis(2, ch, lat, true));
  motion_decoder_ = register_module("motion_decoder", Synthesis(lat, ch, 2, true));
  residual_encoder_ = register_module("residual_encoder", Analysis(3, ch, lat, true));
  residual_decoder_ = register_module("residual_decoder", Synthesis(lat, ch, 3, true));
  prior_ = register_module("prior", PriorModel(lat, ch));
  compensation_ = register_module("compensation", Compensation(config.refine_channels));
}

template <typename Fn>
auto RecurrentBackboneImpl::with_state(LstmState* state, Fn&& fn) {
  if (recurrent_) return fn(state);
  LstmState scratch;
  return fn(&scratch);
}

ChainState RecurrentBackboneImpl::init_chain(int64_t batch, int64_t height, int64_t width,
                                             const torch::TensorOptions& options) const {
  if (height % kDownsampling != 0 || width % kDownsampling != 0) {
    throw ConfigError("frame size must be divisible by " + std::to_string(kDownsampling));
  }
  const int64_t h = height / kDownsampling, w = width / kDownsampling;
  auto zero = [&](int64_t c) {
    return LstmState{torch::zeros({batch, c, h, w}, options), torch::zeros({batch, c, h, w}, options)};
  };
  ChainState chain;
  const auto ch = config_.channels;
  chain.recurrent = {zero(ch), zero(ch), zero(ch), zero(ch), zero(ch)};
  chain.previous = {torch::zeros({batch, config_.latent_channels, h, w}, options),
                    torch::zeros({batch, config_.latent_channels, h, w}, options)};
  return chain;
}

torch::Tensor RecurrentBackboneImpl::estimate_motion(const torch::Tensor& current,
                                                     const torch::Tensor& reference) {
  return flow_->forward(current, reference);
}

torch::Tensor RecurrentBackboneImpl::encode_motion(const torch::Tensor& motion, LstmState* state) {
  return with_state(state, [&](LstmState* s) { return motion_encoder_->forward(motion, s); });
}

torch::Tensor RecurrentBackboneImpl::encode_residual(const torch::Tensor& residual,
                                                     LstmState* state) {
  return with_state(state, [&](LstmState* s) { return residual_encoder_->forward(residual, s); });
}

FramePrior RecurrentBackboneImpl::prior(const LatentCode& previous, LstmState* state) {
  if (!recurrent_) {
    // Without recurrence the prior sees neither history nor state.
    LstmState scratch;
    return prior_->forward({torch::zeros_like(previous.motion), torch::zeros_like(previous.residual)},
                           &scratch);
  }
  return prior_->forward(previous, state);
}

torch::Tensor RecurrentBackboneImpl::decode_motion(const torch::Tensor& latent, LstmState* state) {
  return with_state(state, [&](LstmState* s) { return motion_decoder_->forward(latent, s); });
}

torch::Tensor RecurrentBackboneImpl::compensate(const torch::Tensor& reference,
                                                const torch::Tensor& motion) {
  return compensation_->forward(reference, motion);
}

torch::Tensor RecurrentBackboneImpl::decode_residual(const torch::Tensor& latent,
                                                     LstmState* state) {
  return with_state(state, [&](LstmState* s) { return residual_decoder_->forward(latent, s); });
}

Backbone make_backbone(BackboneId id, const GeneratorConfig& config) {
  switch (id) {
    case BackboneId::kRecurrent: return std::make_shared<RecurrentBackboneImpl>(config, true);
    case BackboneId::kNonRecurrent: return std::make_shared<RecurrentBackboneImpl>(config, false);
  }
  throw ConfigError("unknown backbone id " + std::to_string(static_cast<int>(id)));
}

torch::Tensor quantize_8bit(const torch::Tensor& x) {
  return torch::floor(x.clamp(0.0, 1.0) * 255.0 + 0.5) / 255.0;
}

IntraCodecImpl::IntraCodecImpl(const GeneratorConfig& config, IntraMode mode) : mode_(mode) {
  encoder_ = register_module("encoder", Analysis(3, config.channels, config.latent_channels, false));
  decoder_ = register_module("decoder", Synthesis(config.latent_channels, config.channels, 3, false));
  prior_mean_ = register_parameter("prior_mean", torch::zeros({config.latent_channels}));
  // softplus(0.5413) == 1
  prior_scale_raw_ =
      register_parameter("prior_scale", torch::full({config.latent_channels}, 0.5413));
}

torch::Tensor IntraCodecImpl::encode(const torch::Tensor& x) {
  return encoder_->forward(x - 0.5, nullptr);
}

torch::Tensor IntraCodecImpl::decode(const torch::Tensor& latent) {
  return (decoder_->forward(latent, nullptr) + 0.5).clamp(0.0, 1.0);
}

CodingDistribution IntraCodecImpl::prior(const torch::IntArrayRef& latent_shape) const {
  const int64_t c = prior_mean_.size(0);
  auto mean = prior_mean_.view({1, c, 1, 1}).expand(latent_shape);
  auto scale = F::softplus(prior_scale_raw_).clamp_min(kScaleFloor).view({1, c, 1, 1}).expand(latent_shape);
  return {mean, scale};
}

IntraOutput IntraCodecImpl::forward(const torch::Tensor& x, QuantMode mode) {
  if (x.dim() != 4 || x.size(1) != 3) throw ModelError("intra codec expects [B,3,H,W]");
  IntraOutput out;
  if (mode_ == IntraMode::kLossless) {
    out.reconstruction = quantize_8bit(x);
    out.bits = torch::full({x.size(0)}, 24.0 * static_cast<double>(x.size(2) * x.size(3)), x.options());
    return out;
  }
  if (x.size(2) % kDownsampling != 0 || x.size(3) % kDownsampling != 0) {
    throw ConfigError("intra codec: frame size must be divisible by " + std::to_string(kDownsampling));
  }
  auto latent = quantize(encode(x), mode);
  if (mode == QuantMode::kTest) latent = clamp_to_symbol_range(latent);
  out.latent = latent;
  out.reconstruction = decode(latent);
  out.dist = prior(latent.sizes());
  out.bits = bits_estimate(latent, out.dist);
  return out;
}

}  // namespace plvc
