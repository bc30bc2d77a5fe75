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

#include "plvc/discriminator.hpp"
#include "plvc/error.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

using testing::bit_equal;

LatentCode random_latents(int64_t batch, int64_t channels, int64_t size, uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return {torch::randint(-3, 4, {batch, channels, size / 16, size / 16}, gen).to(torch::kFloat32),
          torch::randint(-3, 4, {batch, channels, size / 16, size / 16}, gen).to(torch::kFloat32)};
}

std::vector<DiscriminatorStep> random_steps(int n, const AblationConfig& a, int64_t latent,
                                            uint64_t seed) {
  std::vector<DiscriminatorStep> steps;
  for (int i = 0; i < n; ++i) {
    DiscriminatorStep s;
    s.current = testing::random_image(64, 64, seed * 100 + 2 * i).unsqueeze(0);
    s.previous = testing::random_image(64, 64, seed * 100 + 2 * i + 1).unsqueeze(0);
    s.cond = build_condition(random_latents(1, latent, 64, seed * 100 + i),
                             torch::randn({1, 2, 64, 64}), a);
    steps.push_back(s);
  }
  return steps;
}

TEST(Ablation, InputChannelCounts) {
  EXPECT_EQ(AblationConfig::full().input_channels(64), 72);
  EXPECT_EQ(AblationConfig::without_hidden().input_channels(64), 72);
  EXPECT_EQ(AblationConfig::without_hidden_motion().input_channels(64), 70);
  EXPECT_EQ(AblationConfig::without_hidden_motion_spatial().input_channels(64), 6);
}

TEST(Ablation, NestingIsEnforced) {
  AblationConfig a;
  a.use_spatial_condition = false;
  EXPECT_THROW(a.validate(), ConfigError);
  a.use_motion_condition = false;
  EXPECT_THROW(a.validate(), ConfigError);
  a.use_hidden = false;
  EXPECT_NO_THROW(a.validate());
  AblationConfig b;
  b.use_motion_condition = false;
  EXPECT_THROW(b.validate(), ConfigError);
}

TEST(Ablation, HiddenScopeControlsGeneratorRecurrence) {
  EXPECT_TRUE(AblationConfig::full().generator_recurrent());
  EXPECT_FALSE(AblationConfig::without_hidden(HiddenScope::kGAndD).generator_recurrent());
  EXPECT_TRUE(AblationConfig::without_hidden(HiddenScope::kDOnly).generator_recurrent());
}

TEST(Ablation, JsonRoundtrip) {
  for (const auto& a : {AblationConfig::full(), AblationConfig::without_hidden_motion(HiddenScope::kDOnly)}) {
    EXPECT_EQ(AblationConfig::from_json(a.to_json()), a);
  }
  EXPECT_THROW(parse_hidden_scope("g_only"), ConfigError);
}

TEST(Condition, UpsampledShapesAndOmission) {
  const auto y = random_latents(2, 32, 64, 1);
  const auto m = torch::randn({2, 2, 64, 64});
  const auto full = build_condition(y, m, AblationConfig::full());
  EXPECT_EQ(full.spatial.sizes(), (std::vector<int64_t>{2, 64, 64, 64}));
  EXPECT_TRUE(bit_equal(full.short_term, m));
  // Nearest-neighbour: every 16x16 block repeats one latent value.
  EXPECT_EQ(full.spatial[1][3][17][31].item<float>(), y.motion[1][3][1][1].item<float>());
  EXPECT_EQ(full.spatial[0][40][63][0].item<float>(), y.residual[0][8][3][0].item<float>());
  const auto none = build_condition(y, m, AblationConfig::without_hidden_motion_spatial());
  EXPECT_FALSE(none.spatial.defined());
  EXPECT_FALSE(none.short_term.defined());
  EXPECT_FALSE(build_condition(y, m, AblationConfig::without_hidden_motion()).short_term.defined());
}

TEST(Discriminator, ScoreStrictlyInsideUnitInterval) {
  torch::manual_seed(1);
  Discriminator d(AblationConfig::full(), 64);
  EXPECT_EQ(d->input_channels(), 72);
  torch::NoGradGuard no_grad;
  const auto steps = random_steps(2, AblationConfig::full(), 32, 1);
  const auto out = d->forward(steps[0].current, steps[0].previous, steps[0].cond, {});
  EXPECT_GT(out.score.item<float>(), 0.0f);
  EXPECT_LT(out.score.item<float>(), 1.0f);
  EXPECT_TRUE(out.next.defined());
  const auto again = d->forward(steps[0].current, steps[0].previous, steps[0].cond, {});
  EXPECT_TRUE(bit_equal(out.score, again.score));
}

TEST(Discriminator, RejectsMismatchedConditions) {
  Discriminator d(AblationConfig::without_hidden_motion(), 64);
  torch::NoGradGuard no_grad;
  const auto steps = random_steps(1, AblationConfig::full(), 32, 2);
  EXPECT_THROW(d->forward(steps[0].current, steps[0].previous, steps[0].cond, {}), ModelError);
  ConditionBundle wrong;
  wrong.spatial = torch::zeros({1, 10, 64, 64});
  EXPECT_THROW(d->forward(steps[0].current, steps[0].previous, wrong, {}), ModelError);
}

TEST(Discriminator, SingleStepRolloutEqualsForward) {
  torch::manual_seed(2);
  Discriminator d(AblationConfig::full(), 64);
  torch::NoGradGuard no_grad;
  const auto steps = random_steps(1, AblationConfig::full(), 32, 3);
  const auto scores = rollout_discriminator(d, steps);
  ASSERT_EQ(scores.size(), 1u);
  EXPECT_TRUE(bit_equal(scores[0], d->forward(steps[0].current, steps[0].previous, steps[0].cond, {}).score));
}

TEST(Discriminator, StatelessScoresPermuteWithSteps) {
  torch::manual_seed(3);
  const auto a = AblationConfig::without_hidden();
  Discriminator d(a, 64);
  torch::NoGradGuard no_grad;
  auto steps = random_steps(4, a, 32, 4);
  const auto before = rollout_discriminator(d, steps);
  std::swap(steps[0], steps[3]);
  std::swap(steps[1], steps[2]);
  const auto after = rollout_discriminator(d, steps);
  EXPECT_TRUE(bit_equal(before[0], after[3]));
  EXPECT_TRUE(bit_equal(before[1], after[2]));
}

TEST(Discriminator, HiddenStateMakesScoresOrderDependent) {
  int changed = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    torch::manual_seed(seed);
    Discriminator d(AblationConfig::full(), 64);
    torch::NoGradGuard no_grad;
    auto steps = random_steps(3, AblationConfig::full(), 32, 10 + seed);
    const auto before = rollout_discriminator(d, steps);
    std::swap(steps[0], steps[1]);
    const auto after = rollout_discriminator(d, steps);
    if (!bit_equal(before[2], after[2])) ++changed;
  }
  EXPECT_EQ(changed, 10);
}

TEST(Discriminator, MotionConditionSensitivity) {
  torch::manual_seed(4);
  Discriminator with(AblationConfig::full(), 64);
  Discriminator without(AblationConfig::without_hidden_motion(), 64);
  const auto steps = random_steps(1, AblationConfig::full(), 32, 5);
  auto motion = steps[0].cond.short_term.clone().requires_grad_(true);
  ConditionBundle cond{steps[0].cond.spatial, motion};
  with->forward(steps[0].current, steps[0].previous, cond, {}).score.sum().backward();
  EXPECT_GT(motion.grad().abs().sum().item<double>(), 0.0);
  // Without the motion condition the score cannot depend on it at all.
  EXPECT_EQ(without->input_channels(), 70);
  torch::NoGradGuard no_grad;
  ConditionBundle spatial_only{steps[0].cond.spatial, {}};
  const auto s = without->forward(steps[0].current, steps[0].previous, spatial_only, {}).score;
  EXPECT_TRUE(bit_equal(s, without->forward(steps[0].current, steps[0].previous, spatial_only, {}).score));
}

TEST(Discriminator, SpectralLayersNormalized) {
  torch::manual_seed(5);
  Discriminator d(AblationConfig::full(), 64);
  const auto layers = d->spectral_layers();
  EXPECT_EQ(layers.size(), 7u);  // six stages plus the recurrent gates
  for (const auto& layer : layers) {
    const auto w = layer->normalized_weight().detach().reshape({layer->weight().size(0), -1});
    const double sigma = torch::linalg_svdvals(w.to(torch::kFloat64)).max().item<double>();
    EXPECT_GE(sigma, 0.9);
    EXPECT_LE(sigma, 1.1);
  }
}

TEST(Discriminator, WithoutHiddenHasNoRecurrentLayer) {
  Discriminator d(AblationConfig::without_hidden(), 64);
  EXPECT_EQ(d->spectral_layers().size(), 6u);
  Discriminator bare(AblationConfig::without_hidden_motion_spatial(), 64);
  EXPECT_EQ(bare->input_channels(), 6);
}

}  // namespace
}  // namespace plvc
