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

#include "plvc/layers.hpp"

#include <cmath>

#include "plvc/error.hpp"

namespace plvc {
namespace F = torch::nn::functional;
using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

namespace {

torch::Tensor gdn_norm(const torch::Tensor& x, const torch::Tensor& beta,
                       const torch::Tensor& gamma) {
  const int64_t c = x.size(1);
  return F::conv2d(x * x, gamma.view({c, c, 1, 1})) + beta.view({1, c, 1, 1});
}

class GdnFunction : public torch::autograd::Function<GdnFunction> {
 public:
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& x,
                               const torch::Tensor& beta, const torch::Tensor& gamma,
                               bool inverse) {
    const auto norm = gdn_norm(x, beta, gamma);
    const auto root = norm.sqrt();
    ctx->save_for_backward({x, beta, gamma, norm, root});
    ctx->saved_data["inverse"] = inverse;
    return inverse ? x * root : x / root;
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_outputs) {
    const auto saved = ctx->get_saved_variables();
    const auto& x = saved[0];
    const auto& gamma = saved[2];
    const auto& norm = saved[3];
    const auto& root = saved[4];
    const bool inverse = ctx->saved_data["inverse"].toBool();
    const auto& g = grad_outputs[0];
    const int64_t c = x.size(1);

    // dL/dnorm_i = sign * t_i / 2 with
    //   forward: t = g x / norm^{3/2}, sign = -1
    //   inverse: t = g x / norm^{1/2}, sign = +1
    const double sign = inverse ? 1.0 : -1.0;
    const auto t = inverse ? g * x / root : g * x / (norm * root);
    const auto direct = inverse ? g * root : g / root;
    const auto mixed = F::conv2d(t, gamma.t().contiguous().view({c, c, 1, 1}));
    const auto grad_x = direct + sign * x * mixed;
    const auto grad_beta = 0.5 * sign * t.sum({0, 2, 3});
    const auto grad_gamma = 0.5 * sign * torch::einsum("bihw,bjhw->ij", {t, x * x});
    return {grad_x, grad_beta, grad_gamma, torch::Tensor()};
  }
};

}  // namespace

torch::Tensor gdn(const torch::Tensor& x, const torch::Tensor& beta, const torch::Tensor& gamma,
                  bool inverse) {
  if (x.dim() != 4 || beta.dim() != 1 || gamma.dim() != 2 || beta.size(0) != x.size(1) ||
      gamma.size(0) != x.size(1) || gamma.size(1) != x.size(1)) {
    throw ModelError("gdn: parameter shapes do not match the input channels");
  }
  return GdnFunction::apply(x, beta, gamma, inverse);
}

GdnImpl::GdnImpl(int64_t channels, bool inverse) : inverse_(inverse) {
  beta_raw_ = register_parameter("beta", torch::ones({channels}));
  gamma_raw_ = register_parameter(
      "gamma", (0.1 * torch::eye(channels) + 1e-3 * torch::ones({channels, channels})).sqrt());
}

torch::Tensor GdnImpl::beta() const { return beta_raw_ * beta_raw_ + 1e-6; }
torch::Tensor GdnImpl::gamma() const { return gamma_raw_ * gamma_raw_; }

torch::Tensor GdnImpl::forward(const torch::Tensor& x) {
  return gdn(x, beta(), gamma(), inverse_);
}

SpectralConv2dImpl::SpectralConv2dImpl(int64_t in_channels, int64_t out_channels,
                                       int64_t kernel, int64_t stride, int64_t padding)
    : stride_(stride), padding_(padding) {
  // Same default initialization as torch::nn::Conv2d.
  torch::nn::Conv2d reference(
      torch::nn::Conv2dOptions(in_channels, out_channels, kernel).stride(stride).padding(padding));
  weight_ = register_parameter("weight", reference->weight.detach().clone());
  bias_ = register_parameter("bias", reference->bias.detach().clone());
  u_ = register_buffer("u", F::normalize(torch::randn({out_channels}),
                                         F::NormalizeFuncOptions().dim(0).eps(1e-12)));
  power_iteration(20);
}

void SpectralConv2dImpl::power_iteration(int iterations) {
  torch::NoGradGuard no_grad;
  const auto w = weight_.view({weight_.size(0), -1});
  auto u = u_.clone();
  for (int i = 0; i < iterations; ++i) {
    const auto v = F::normalize(torch::mv(w.t(), u), F::NormalizeFuncOptions().dim(0).eps(1e-12));
    u = F::normalize(torch::mv(w, v), F::NormalizeFuncOptions().dim(0).eps(1e-12));
  }
  u_.copy_(u);
}

torch::Tensor SpectralConv2dImpl::normalized_weight() const {
  const auto w = weight_.view({weight_.size(0), -1});
  const auto u = u_.detach();
  const auto v = F::normalize(torch::mv(w.t().detach(), u),
                              F::NormalizeFuncOptions().dim(0).eps(1e-12));
  const auto sigma = torch::dot(u, torch::mv(w, v));
  return weight_ / sigma;
}

torch::Tensor SpectralConv2dImpl::forward(const torch::Tensor& x) {
  return F::conv2d(x, normalized_weight(),
                   F::Conv2dFuncOptions().bias(bias_).stride(stride_).padding(padding_));
}

ConvLstmImpl::ConvLstmImpl(int64_t input_channels, int64_t hidden_channels, int64_t kernel,
                           bool spectral)
    : hidden_(hidden_channels) {
  const int64_t in = input_channels + hidden_channels;
  if (spectral) {
    spectral_gates_ = register_module(
        "gates", SpectralConv2d(in, 4 * hidden_channels, kernel, 1, kernel / 2));
  } else {
    gates_ = register_module(
        "gates",
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 4 * hidden_channels, kernel).padding(kernel / 2)));
    torch::NoGradGuard no_grad;
    gates_->bias.zero_();
    gates_->bias.narrow(0, hidden_channels, hidden_channels).fill_(1.0);  // forget gate
  }
}

LstmState ConvLstmImpl::zero_state(int64_t batch, int64_t height, int64_t width,
                                   const torch::TensorOptions& options) const {
  return {torch::zeros({batch, hidden_, height, width}, options),
          torch::zeros({batch, hidden_, height, width}, options)};
}

LstmState ConvLstmImpl::forward(const torch::Tensor& x, const LstmState& state) {
  const LstmState s =
      state.defined() ? state : zero_state(x.size(0), x.size(2), x.size(3), x.options());
  if (s.hidden.size(0) != x.size(0) || s.hidden.size(1) != hidden_ ||
      s.hidden.size(2) != x.size(2) || s.hidden.size(3) != x.size(3)) {
    throw ModelError("ConvLSTM: state shape does not match the input");
  }
  const auto combined = torch::cat({x, s.hidden}, 1);
  const auto gates = spectral_gates_ ? spectral_gates_->forward(combined) : gates_->forward(combined);
  const auto parts = gates.chunk(4, 1);
  const auto input_gate = torch::sigmoid(parts[0]);
  const auto forget_gate = torch::sigmoid(parts[1]);
  const auto output_gate = torch::sigmoid(parts[2]);
  const auto candidate = torch::tanh(parts[3]);
  const auto cell = forget_gate * s.cell + input_gate * candidate;
  return {output_gate * torch::tanh(cell), cell};
}

}  // namespace plvc
