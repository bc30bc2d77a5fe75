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

#ifndef PLVC_LAYERS_HPP_
#define PLVC_LAYERS_HPP_

#include <torch/torch.h>

namespace plvc {

/// Generalized divisive normalization over channels:
///   forward:  y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2)
///   inverse:  y_i = x_i * sqrt(beta_i + sum_j gamma_ij x_j^2)
/// x is [B,C,H,W], beta [C] (positive), gamma [C,C] (non-negative). The
/// backward pass is analytic, not traced through autograd.
torch::Tensor gdn(const torch::Tensor& x, const torch::Tensor& beta, const torch::Tensor& gamma,
                  bool inverse);

/// GDN layer with positivity enforced by squaring the raw parameters.
class GdnImpl : public torch::nn::Module {
 public:
  GdnImpl(int64_t channels, bool inverse);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor beta() const;
  torch::Tensor gamma() const;
  bool inverse() const { return inverse_; }

 private:
  bool inverse_;
  torch::Tensor beta_raw_, gamma_raw_;
};
TORCH_MODULE(Gdn);

/// Convolution whose weight is divided by its largest singular value. The
/// singular vector estimate `u` is a buffer; it only moves when
/// power_iteration() is called, so forward passes are pure functions of the
/// parameters and buffers.
class SpectralConv2dImpl : public torch::nn::Module {
 public:
  SpectralConv2dImpl(int64_t in_channels, int64_t out_channels, int64_t kernel,
                     int64_t stride = 1, int64_t padding = 0);
  torch::Tensor forward(const torch::Tensor& x);

  void power_iteration(int iterations);
  // W / sigma, shaped like the convolution kernel.
  torch::Tensor normalized_weight() const;
  const torch::Tensor& weight() const { return weight_; }
  int64_t in_channels() const { return weight_.size(1); }

 private:
  int64_t stride_, padding_;
  torch::Tensor weight_, bias_, u_;
};
TORCH_MODULE(SpectralConv2d);

struct LstmState {
  torch::Tensor hidden;
  torch::Tensor cell;

  bool defined() const { return hidden.defined() && cell.defined(); }
  LstmState detach() const { return {hidden.detach(), cell.detach()}; }
};

/// Convolutional LSTM cell: the four gates come from one convolution over
/// [input, hidden].
class ConvLstmImpl : public torch::nn::Module {
 public:
  ConvLstmImpl(int64_t input_channels, int64_t hidden_channels, int64_t kernel = 3,
               bool spectral = false);

  LstmState forward(const torch::Tensor& x, const LstmState& state);
  LstmState zero_state(int64_t batch, int64_t height, int64_t width,
                       const torch::TensorOptions& options) const;

  int64_t hidden_channels() const { return hidden_; }
  SpectralConv2d spectral_gates() const { return spectral_gates_; }

 private:
  int64_t hidden_;
  torch::nn::Conv2d gates_{nullptr};
  SpectralConv2d spectral_gates_{nullptr};
};
TORCH_MODULE(ConvLstm);

}  // namespace plvc

#endif  // PLVC_LAYERS_HPP_
