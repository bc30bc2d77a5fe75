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

#include "plvc/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "plvc/error.hpp"

namespace plvc {
namespace fs = std::filesystem;
namespace F = torch::nn::functional;
using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

MotionField::MotionField(torch::Tensor vectors) {
  if (vectors.dim() == 4 && vectors.size(0) == 1) vectors = vectors.squeeze(0);
  if (vectors.dim() != 3 || vectors.size(0) != 2) {
    throw ModelError("motion field must be [2,H,W]");
  }
  if (!torch::isfinite(vectors).all().item<bool>()) {
    throw ModelError("motion field contains non-finite values");
  }
  vectors_ = vectors.contiguous();
}

namespace {

// Sample position of one output pixel after edge clamping.
template <typename T>
struct Tap {
  int64_t x0, x1, y0, y1;
  T wx, wy;
  bool inside_x, inside_y;  // derivative w.r.t. the flow is zero when clamped
};

template <typename T>
inline Tap<T> make_tap(int64_t x, int64_t y, T fx, T fy, int64_t h, int64_t w) {
  Tap<T> tap;
  const T px = static_cast<T>(x) + fx;
  const T py = static_cast<T>(y) + fy;
  tap.inside_x = px > T(0) && px < static_cast<T>(w - 1);
  tap.inside_y = py > T(0) && py < static_cast<T>(h - 1);
  const T sx = std::clamp(px, T(0), static_cast<T>(w - 1));
  const T sy = std::clamp(py, T(0), static_cast<T>(h - 1));
  tap.x0 = static_cast<int64_t>(std::floor(sx));
  tap.y0 = static_cast<int64_t>(std::floor(sy));
  tap.x1 = std::min<int64_t>(tap.x0 + 1, w - 1);
  tap.y1 = std::min<int64_t>(tap.y0 + 1, h - 1);
  tap.wx = sx - static_cast<T>(tap.x0);
  tap.wy = sy - static_cast<T>(tap.y0);
  return tap;
}

void check_warp_args(const torch::Tensor& image, const torch::Tensor& flow) {
  if (image.dim() != 4 || flow.dim() != 4 || flow.size(1) != 2) {
    throw ModelError("warp expects image [B,C,H,W] and flow [B,2,H,W]");
  }
  if (image.size(0) != flow.size(0) || image.size(2) != flow.size(2) ||
      image.size(3) != flow.size(3)) {
    throw ModelError("warp: image and flow dimensions differ");
  }
  if (image.scalar_type() != flow.scalar_type()) {
    throw ModelError("warp: image and flow dtypes differ");
  }
}

torch::Tensor warp_forward(const torch::Tensor& image_in, const torch::Tensor& flow_in) {
  const auto image = image_in.contiguous();
  const auto flow = flow_in.contiguous();
  const int64_t B = image.size(0), C = image.size(1), H = image.size(2), W = image.size(3);
  auto out = torch::empty_like(image);
  AT_DISPATCH_FLOATING_TYPES(image.scalar_type(), "warp_forward", [&] {
    const scalar_t* img = image.data_ptr<scalar_t>();
    const scalar_t* fl = flow.data_ptr<scalar_t>();
    scalar_t* dst = out.data_ptr<scalar_t>();
    const int64_t plane = H * W;
    for (int64_t b = 0; b < B; ++b) {
      const scalar_t* fxp = fl + (b * 2) * plane;
      const scalar_t* fyp = fxp + plane;
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
          const int64_t p = y * W + x;
          const auto t = make_tap<scalar_t>(x, y, fxp[p], fyp[p], H, W);
          const scalar_t w00 = (1 - t.wx) * (1 - t.wy), w01 = t.wx * (1 - t.wy);
          const scalar_t w10 = (1 - t.wx) * t.wy, w11 = t.wx * t.wy;
          for (int64_t c = 0; c < C; ++c) {
            const scalar_t* src = img + (b * C + c) * plane;
            dst[(b * C + c) * plane + p] = w00 * src[t.y0 * W + t.x0] + w01 * src[t.y0 * W + t.x1] +
                                           w10 * src[t.y1 * W + t.x0] + w11 * src[t.y1 * W + t.x1];
          }
        }
      }
    }
  });
  return out;
}

std::pair<torch::Tensor, torch::Tensor> warp_backward(const torch::Tensor& image_in,
                                                      const torch::Tensor& flow_in,
                                                      const torch::Tensor& grad_in) {
  const auto image = image_in.contiguous();
  const auto flow = flow_in.contiguous();
  const auto grad = grad_in.contiguous();
  const int64_t B = image.size(0), C = image.size(1), H = image.size(2), W = image.size(3);
  auto grad_image = torch::zeros_like(image);
  auto grad_flow = torch::zeros_like(flow);
  AT_DISPATCH_FLOATING_TYPES(image.scalar_type(), "warp_backward", [&] {
    const scalar_t* img = image.data_ptr<scalar_t>();
    const scalar_t* fl = flow.data_ptr<scalar_t>();
    const scalar_t* g = grad.data_ptr<scalar_t>();
    scalar_t* gi = grad_image.data_ptr<scalar_t>();
    scalar_t* gf = grad_flow.data_ptr<scalar_t>();
    const int64_t plane = H * W;
    for (int64_t b = 0; b < B; ++b) {
      const scalar_t* fxp = fl + (b * 2) * plane;
      const scalar_t* fyp = fxp + plane;
      scalar_t* gfx = gf + (b * 2) * plane;
      scalar_t* gfy = gfx + plane;
      for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
          const int64_t p = y * W + x;
          const auto t = make_tap<scalar_t>(x, y, fxp[p], fyp[p], H, W);
          const scalar_t w00 = (1 - t.wx) * (1 - t.wy), w01 = t.wx * (1 - t.wy);
          const scalar_t w10 = (1 - t.wx) * t.wy, w11 = t.wx * t.wy;
          scalar_t dx = 0, dy = 0;
          for (int64_t c = 0; c < C; ++c) {
            const int64_t base = (b * C + c) * plane;
            const scalar_t go = g[base + p];
            const scalar_t* src = img + base;
            scalar_t* gsrc = gi + base;
            gsrc[t.y0 * W + t.x0] += w00 * go;
            gsrc[t.y0 * W + t.x1] += w01 * go;
            gsrc[t.y1 * W + t.x0] += w10 * go;
            gsrc[t.y1 * W + t.x1] += w11 * go;
            const scalar_t v00 = src[t.y0 * W + t.x0], v01 = src[t.y0 * W + t.x1];
            const scalar_t v10 = src[t.y1 * W + t.x0], v11 = src[t.y1 * W + t.x1];
            dx += go * ((1 - t.wy) * (v01 - v00) + t.wy * (v11 - v10));
            dy += go * ((1 - t.wx) * (v10 - v00) + t.wx * (v11 - v01));
          }
          if (t.inside_x) gfx[p] = dx;
          if (t.inside_y) gfy[p] = dy;
        }
      }
    }
  });
  return {grad_image, grad_flow};
}

class WarpFunction : public torch::autograd::Function<WarpFunction> {
 public:
  static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& image,
                               const torch::Tensor& flow) {
    ctx->save_for_backward({image, flow});
    return warp_forward(image, flow);
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_outputs) {
    const auto saved = ctx->get_saved_variables();
    auto [gi, gf] = warp_backward(saved[0], saved[1], grad_outputs[0]);
    return {gi, gf};
  }
};

}  // namespace

torch::Tensor warp(const torch::Tensor& image, const torch::Tensor& flow) {
  check_warp_args(image, flow);
  return WarpFunction::apply(image, flow);
}

Frame warp(const Frame& reference, const MotionField& flow) {
  if (reference.height() != flow.height() || reference.width() != flow.width()) {
    throw ModelError("warp: frame and motion field dimensions differ");
  }
  torch::NoGradGuard no_grad;
  auto out = warp(reference.pixels().unsqueeze(0), flow.vectors().to(torch::kFloat32).unsqueeze(0));
  return Frame(out.squeeze(0).clamp(0.0, 1.0));
}

FlowNetImpl::FlowNetImpl(int64_t levels, int64_t channels) : levels_(levels) {
  if (levels < 1) throw ConfigError("flow network needs at least one level");
  for (int64_t l = 0; l < levels; ++l) {
    torch::nn::Sequential seq;
    seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(8, channels, 3).padding(1)));
    seq->push_back(torch::nn::ReLU());
    for (int i = 0; i < 3; ++i) {
      seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)));
      seq->push_back(torch::nn::ReLU());
    }
    auto last = torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 2, 3).padding(1));
    {
      torch::NoGradGuard no_grad;
      last->weight.mul_(0.1);
      last->bias.zero_();
    }
    seq->push_back(last);
    refiners_.push_back(register_module("level" + std::to_string(l), seq));
  }
}

torch::Tensor FlowNetImpl::forward(const torch::Tensor& current, const torch::Tensor& reference) {
  if (current.sizes() != reference.sizes() || current.dim() != 4) {
    throw ModelError("flow estimation: frame size mismatch");
  }
  const int64_t factor = int64_t{1} << (levels_ - 1);
  if (current.size(2) % factor != 0 || current.size(3) % factor != 0) {
    throw ModelError("flow estimation: " + std::to_string(levels_) +
                     " levels need frame sizes divisible by " + std::to_string(factor));
  }
  std::vector<torch::Tensor> cur{current}, ref{reference};
  for (int64_t l = 1; l < levels_; ++l) {
    cur.push_back(F::avg_pool2d(cur.back(), F::AvgPool2dFuncOptions(2)));
    ref.push_back(F::avg_pool2d(ref.back(), F::AvgPool2dFuncOptions(2)));
  }
  torch::Tensor flow;
  for (int64_t l = levels_ - 1; l >= 0; --l) {
    const auto& c = cur[l];
    if (!flow.defined()) {
      flow = torch::zeros({c.size(0), 2, c.size(2), c.size(3)}, c.options());
    } else {
      flow = 2.0 * F::interpolate(flow, F::InterpolateFuncOptions()
                                            .size(std::vector<int64_t>{c.size(2), c.size(3)})
                                            .mode(torch::kBilinear)
                                            .align_corners(false));
    }
    const auto warped = warp(ref[l], flow);
    const auto input = torch::cat({c - 0.5, warped - 0.5, flow}, 1);
    flow = flow + refiners_[l]->forward(input);
  }
  return flow;
}

MotionField estimate_flow(FlowNet& net, const Frame& current, const Frame& reference) {
  if (current.height() != reference.height() || current.width() != reference.width()) {
    throw ModelError("flow estimation: frame size mismatch");
  }
  torch::NoGradGuard no_grad;
  auto flow = net->forward(current.pixels().unsqueeze(0), reference.pixels().unsqueeze(0));
  return MotionField(flow.squeeze(0));
}

void write_motion_field(const fs::path& path, const MotionField& m) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  if (m.height() > 0xFFFF || m.width() > 0xFFFF) throw IoError("motion field too large");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const uint16_t h = static_cast<uint16_t>(m.height()), w = static_cast<uint16_t>(m.width());
  out.write(reinterpret_cast<const char*>(&h), 2);
  out.write(reinterpret_cast<const char*>(&w), 2);
  const auto hwc = m.vectors().to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  out.write(reinterpret_cast<const char*>(hwc.data_ptr<float>()),
            static_cast<std::streamsize>(hwc.numel() * sizeof(float)));
  if (!out) throw IoError("short write to " + path.string());
}

MotionField read_motion_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  uint16_t h = 0, w = 0;
  in.read(reinterpret_cast<char*>(&h), 2);
  in.read(reinterpret_cast<char*>(&w), 2);
  if (!in) throw IoError("truncated motion field header in " + path.string());
  auto hwc = torch::empty({h, w, 2}, torch::kFloat32);
  in.read(reinterpret_cast<char*>(hwc.data_ptr<float>()),
          static_cast<std::streamsize>(hwc.numel() * sizeof(float)));
  if (!in) throw IoError("truncated motion field payload in " + path.string());
  return MotionField(hwc.permute({2, 0, 1}).contiguous());
}

}  // namespace plvc
