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

#include <gtest/gtest.h>

#include "plvc/dataset.hpp"
#include "plvc/error.hpp"
#include "plvc/flow.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

namespace F = torch::nn::functional;

// Independent oracle: grid_sample with border padding and aligned corners
// samples at exactly x + u, y + v in pixel units.
torch::Tensor grid_sample_oracle(const torch::Tensor& image, const torch::Tensor& flow) {
  const int64_t h = image.size(2), w = image.size(3);
  const auto opts = image.options();
  const auto xs = torch::arange(w, opts).view({1, 1, w}).expand({image.size(0), h, w});
  const auto ys = torch::arange(h, opts).view({1, h, 1}).expand({image.size(0), h, w});
  const auto gx = (xs + flow.select(1, 0)) * (2.0 / static_cast<double>(w - 1)) - 1.0;
  const auto gy = (ys + flow.select(1, 1)) * (2.0 / static_cast<double>(h - 1)) - 1.0;
  const auto grid = torch::stack({gx, gy}, 3);
  return F::grid_sample(image, grid,
                        F::GridSampleFuncOptions()
                            .mode(torch::kBilinear)
                            .padding_mode(torch::kBorder)
                            .align_corners(true));
}

TEST(Warp, ZeroFlowIsIdentity) {
  const auto img = testing::random_image(16, 20, 1).unsqueeze(0);
  const auto out = warp(img, torch::zeros({1, 2, 16, 20}));
  EXPECT_TRUE(testing::bit_equal(out, img));
}

TEST(Warp, RampShiftsByOneColumn) {
  const auto ramp = (torch::arange(16, torch::kFloat32) / 15.0).view({1, 1, 1, 16}).expand({1, 3, 8, 16}).contiguous();
  auto flow = torch::zeros({1, 2, 8, 16});
  flow.select(1, 0).fill_(1.0);
  const auto out = warp(ramp, flow);
  EXPECT_TRUE(torch::allclose(out.narrow(3, 0, 15), ramp.narrow(3, 1, 15), 0.0, 1e-6));
  // Last column samples past the border and clamps.
  EXPECT_TRUE(torch::allclose(out.select(3, 15), ramp.select(3, 15)));
}

TEST(Warp, MatchesGridSampleOracle) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(7);
  const auto img = torch::rand({2, 3, 12, 17}, gen, torch::kFloat64);
  const auto flow = (torch::rand({2, 2, 12, 17}, gen, torch::kFloat64) - 0.5) * 10.0;
  EXPECT_TRUE(torch::allclose(warp(img, flow), grid_sample_oracle(img, flow), 0.0, 1e-12));
}

TEST(Warp, OutOfFrameStaysInRange) {
  const auto img = testing::random_image(8, 8, 2).unsqueeze(0);
  const auto flow = torch::full({1, 2, 8, 8}, 40.0f);
  const auto out = warp(img, flow);
  EXPECT_GE(out.min().item<float>(), 0.0f);
  EXPECT_LE(out.max().item<float>(), 1.0f);
  EXPECT_TRUE(torch::allclose(out, img.select(3, 7).select(2, 7).view({1, 3, 1, 1}).expand_as(out)));
}

TEST(Warp, LipschitzInReference) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = torch::rand({1, 3, 10, 10}, gen);
    const auto b = torch::rand({1, 3, 10, 10}, gen);
    const auto f = (torch::rand({1, 2, 10, 10}, gen) - 0.5) * 8.0;
    const double lhs = (warp(a, f) - warp(b, f)).abs().max().item<double>();
    EXPECT_LE(lhs, (a - b).abs().max().item<double>() + 1e-6);
  }
}

// Central differences on a weighted sum, double precision, with sample
// positions kept away from integer coordinates.
TEST(Warp, GradientMatchesFiniteDifferences) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(11);
  const auto img = torch::rand({1, 3, 6, 7}, gen, torch::kFloat64);
  const auto frac = 0.2 + 0.6 * torch::rand({1, 2, 6, 7}, gen, torch::kFloat64);
  const auto whole = torch::randint(-1, 2, {1, 2, 6, 7}, gen, torch::kFloat64);
  auto flow = (whole + frac).clone();
  // Keep every sample strictly inside the frame.
  flow.select(1, 0).copy_(flow.select(1, 0).clamp(-0.8, 0.8));
  flow.select(1, 1).copy_(flow.select(1, 1).clamp(-0.8, 0.8));
  const auto weights = torch::rand({1, 3, 6, 7}, gen, torch::kFloat64);

  auto loss = [&](const torch::Tensor& image, const torch::Tensor& f) {
    return (warp(image, f) * weights).sum();
  };
  auto f_var = flow.clone().requires_grad_(true);
  auto i_var = img.clone().requires_grad_(true);
  loss(i_var, f_var).backward();

  const double eps = 1e-4;
  auto numeric = [&](torch::Tensor base, bool wrt_flow) {
    auto grad = torch::zeros_like(base);
    auto flat = base.view(-1);
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double v = flat[i].item<double>();
      flat[i] = v + eps;
      const double up = wrt_flow ? loss(img, base).item<double>() : loss(base, flow).item<double>();
      flat[i] = v - eps;
      const double down = wrt_flow ? loss(img, base).item<double>() : loss(base, flow).item<double>();
      flat[i] = v;
      grad.view(-1)[i] = (up - down) / (2 * eps);
    }
    return grad;
  };
  const auto num_flow = numeric(flow.clone(), true);
  const auto num_img = numeric(img.clone(), false);
  const double rel_flow = (f_var.grad() - num_flow).norm().item<double>() / num_flow.norm().item<double>();
  const double rel_img = (i_var.grad() - num_img).norm().item<double>() / num_img.norm().item<double>();
  EXPECT_LT(rel_flow, 1e-3);
  EXPECT_LT(rel_img, 1e-3);
}

TEST(Warp, ShapeErrors) {
  EXPECT_THROW(warp(torch::zeros({1, 3, 8, 8}), torch::zeros({1, 2, 8, 9})), ModelError);
  EXPECT_THROW(warp(Frame(torch::zeros({3, 8, 8})), MotionField(torch::zeros({2, 4, 4}))), ModelError);
}

TEST(FlowNet, ShapeAndDeterminism) {
  torch::manual_seed(0);
  FlowNet net(4, 32);
  const Frame a(testing::random_image(64, 64, 1));
  const Frame b(testing::random_image(64, 64, 2));
  const auto m = estimate_flow(net, a, b);
  EXPECT_EQ(m.height(), 64);
  EXPECT_EQ(m.width(), 64);
  EXPECT_TRUE(torch::isfinite(m.vectors()).all().item<bool>());
  EXPECT_TRUE(testing::bit_equal(m.vectors(), estimate_flow(net, a, b).vectors()));
}

TEST(FlowNet, RejectsBadSizes) {
  FlowNet net(4, 8);
  EXPECT_THROW(net->forward(torch::zeros({1, 3, 60, 60}), torch::zeros({1, 3, 60, 60})), ModelError);
  EXPECT_THROW(net->forward(torch::zeros({1, 3, 64, 64}), torch::zeros({1, 3, 32, 32})), ModelError);
  EXPECT_THROW(FlowNet(0, 8), ConfigError);
}

TEST(MotionField, BinaryRoundtrip) {
  testing::TempDir dir;
  const MotionField m(torch::randn({2, 5, 7}));
  write_motion_field(dir / "m.bin", m);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.bin"), 4u + 5u * 7u * 2u * 4u);
  EXPECT_TRUE(testing::bit_equal(read_motion_field(dir / "m.bin").vectors(), m.vectors()));
}

// Photometric training on synthetic textures: the estimator must recover a
// known 2 px translation and report near-zero motion for static content.
TEST(FlowNet, LearnsKnownTranslation) {
  torch::manual_seed(3);
  FlowNet net(4, 32);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(1e-3));
  DatasetSpec spec;
  spec.clip_count = 64;
  spec.frames_per_clip = 2;
  spec.frame_size = 64;
  spec.seed = 5;
  std::vector<torch::Tensor> frames;
  for (int64_t i = 0; i < spec.clip_count; ++i) frames.push_back(render_clip(spec, i).clip[0].pixels());
  const auto pool = torch::stack(frames);

  // reference(x) = current(x - 2): sampling the reference at p + (2, 0)
  // recovers current(p).
  auto make_pair = [](const torch::Tensor& cur) {
    auto ref = cur.clone();
    ref.narrow(3, 2, cur.size(3) - 2).copy_(cur.narrow(3, 0, cur.size(3) - 2));
    return ref;
  };
  for (int step = 0; step < 300; ++step) {
    const auto idx = torch::randint(0, pool.size(0), {4}, torch::kLong);
    const auto cur = pool.index_select(0, idx);
    const auto shifted = make_pair(cur);
    const bool still = step % 4 == 3;
    const auto ref = still ? cur : shifted;
    const auto flow = net->forward(cur, ref);
    const auto loss = (warp(ref, flow) - cur).pow(2).narrow(3, 4, 56).mean();
    opt.zero_grad();
    loss.backward();
    opt.step();
  }
  torch::NoGradGuard no_grad;
  const auto cur = pool.narrow(0, 0, 8);
  const auto m = net->forward(cur, make_pair(cur));
  const auto interior = m.narrow(2, 8, 48).narrow(3, 8, 48);
  const double epe = (interior.select(1, 0) - 2.0).pow(2).add(interior.select(1, 1).pow(2)).sqrt().mean().item<double>();
  EXPECT_LT(epe, 1.0);
  const auto still = net->forward(cur, cur);
  EXPECT_LT(still.abs().mean().item<double>(), 0.5);
}

}  // namespace
}  // namespace plvc
