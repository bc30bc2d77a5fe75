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

#include <cmath>
#include <fstream>
#include <numbers>

#include "plvc/error.hpp"
#include "plvc/training.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

using testing::small_config;
using testing::toy_dataset;

constexpr double kTol = 1e-9;

double d_loss_s(const std::vector<double>& real, const std::vector<double>& fake) {
  return d_loss(real, fake);
}

TEST(LossAlgebra, WarmupLoss) {
  EXPECT_NEAR(warmup_loss({0.0}, {0.0}, 256.0), 0.0, kTol);
  EXPECT_NEAR(warmup_loss({1.0}, {0.01}, 256.0), 3.56, kTol);
  EXPECT_NEAR(warmup_loss({1.0, 1.0}, {0.01, 0.01}, 256.0), 2.0 * 3.56, kTol);
  EXPECT_THROW(warmup_loss({NAN}, {0.0}, 1.0), ModelError);
  EXPECT_THROW(warmup_loss({}, {}, 1.0), ModelError);
  const FrameTerms t{torch::tensor(1.0, torch::kDouble), torch::tensor(0.01, torch::kDouble)};
  EXPECT_NEAR(warmup_loss({t, t}, 256.0).item<double>(), 7.12, kTol);
}

TEST(LossAlgebra, DiscriminatorLoss) {
  EXPECT_NEAR(d_loss_s({0.5}, {0.5}), 2.0 * std::numbers::ln2, kTol);
  const double eps = 1e-6;
  EXPECT_NEAR(d_loss_s({1.0 - eps}, {eps}), -2.0 * std::log1p(-eps), kTol);
  EXPECT_NEAR(d_loss_s({1.0 - eps}, {eps}), 2e-6, 1e-11);
  // real = 1 - fake: swapping the two lists leaves the loss unchanged.
  EXPECT_NEAR(d_loss_s({0.7}, {0.3}), d_loss_s({1.0 - 0.3}, {1.0 - 0.7}), kTol);
  EXPECT_THROW(d_loss_s({1.5}, {0.5}), ModelError);
  EXPECT_THROW(d_loss_s({0.5}, {-0.1}), ModelError);
  const auto real = torch::full({4}, 0.5, torch::kDouble);
  EXPECT_NEAR(d_loss({real}, {real}).item<double>(), 2.0 * std::numbers::ln2, kTol);
}

TEST(LossAlgebra, GeneratorLoss) {
  EXPECT_NEAR(g_loss({0.1}, {0.001}, {0.5}, 0.3, 100.0, 0.1), 0.03 + 0.1 + 0.1 * std::numbers::ln2,
              kTol);
  EXPECT_NEAR(g_loss({0.1}, {0.001}, {0.5}, 0.3, 100.0, 0.1), 0.199315, 1e-6);
  EXPECT_NEAR(g_loss({0.1}, {0.001}, {1.0}, 0.3, 100.0, 0.1), 0.13, kTol);
  EXPECT_NEAR(g_loss({0.1}, {0.001}, {0.5}, 0.3, 100.0, 0.0), warmup_loss({0.03}, {0.001}, 100.0),
              kTol);
  EXPECT_THROW(g_loss({0.1}, {0.001}, {2.0}, 0.3, 100.0, 0.1), ModelError);
}

TEST(LossAlgebra, GeneratorLossDecreasesInFakeScore) {
  auto score = torch::tensor(0.3, torch::dtype(torch::kDouble).requires_grad(true));
  const FrameTerms t{torch::tensor(0.1, torch::kDouble), torch::tensor(0.001, torch::kDouble)};
  g_loss({t}, {score}, 0.3, 100.0, 0.1).backward();
  EXPECT_NEAR(score.grad().item<double>(), -0.1 / 0.3, kTol);
  double prev = INFINITY;
  for (double s = 0.05; s < 1.0; s += 0.05) {
    const double v = g_loss({0.1}, {0.001}, {s}, 0.3, 100.0, 0.1);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Presets, TableValues) {
  const auto& low = preset(PresetId::kLow);
  EXPECT_EQ(low.rate_target, 0.025);
  EXPECT_EQ(low.lambda, 256.0);
  EXPECT_EQ(low.alpha1, 3.0);
  EXPECT_EQ(low.alpha2, 0.010);
  const auto& med = preset_by_name("medium");
  EXPECT_EQ(med.rate_target, 0.050);
  EXPECT_EQ(med.lambda, 512.0);
  EXPECT_EQ(med.alpha1, 1.0);
  EXPECT_EQ(med.alpha2, 0.010);
  const auto& high = preset(PresetId::kHigh);
  EXPECT_EQ(high.rate_target, 0.100);
  EXPECT_EQ(high.lambda, 1024.0);
  EXPECT_EQ(high.alpha1, 0.3);
  EXPECT_EQ(high.alpha2, 0.001);
  for (auto id : {PresetId::kLow, PresetId::kMedium, PresetId::kHigh}) {
    EXPECT_EQ(preset(id).lambda_prime, 100.0);
    EXPECT_EQ(preset(id).beta, 0.1);
  }
  EXPECT_THROW(preset_by_name("ultra"), ConfigError);
}

TEST(AlphaSchedule, Examples) {
  EXPECT_EQ(alpha_schedule(0.03, preset(PresetId::kLow)), 3.0);
  EXPECT_EQ(alpha_schedule(0.02, preset(PresetId::kLow)), 0.010);
  EXPECT_EQ(alpha_schedule(0.100, preset(PresetId::kHigh)), 0.3);
  EXPECT_EQ(alpha_schedule(0.2, preset(PresetId::kMedium), 5.0), 0.010);
  EXPECT_EQ(alpha_schedule(0.25, preset(PresetId::kMedium), 5.0), 1.0);
  EXPECT_THROW(alpha_schedule(-0.1, preset(PresetId::kLow)), ModelError);
}

TEST(AlphaSchedule, TwoValuedAndMonotone) {
  for (auto id : {PresetId::kLow, PresetId::kMedium, PresetId::kHigh}) {
    const auto& p = preset(id);
    double prev = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double a = alpha_schedule(i * 0.001, p);
      EXPECT_TRUE(a == p.alpha1 || a == p.alpha2);
      EXPECT_GE(a, prev);
      prev = a;
    }
  }
}

TEST(SampleBatch, DeterministicAndInRange) {
  const auto a = sample_batch(3, 17, 200, 4);
  EXPECT_EQ(a, sample_batch(3, 17, 200, 4));
  EXPECT_NE(a, sample_batch(3, 18, 200, 4));
  for (auto i : a) {
    EXPECT_GE(i, 0);
    EXPECT_LT(i, 200);
  }
  EXPECT_THROW(sample_batch(1, 0, 0, 4), ConfigError);
}

TEST(WarmupConvergence, RunningMeanRule) {
  std::vector<double> flat(100, 1.0);
  EXPECT_TRUE(warmup_converged(flat));
  std::vector<double> falling;
  for (int i = 0; i < 100; ++i) falling.push_back(100.0 - i);
  EXPECT_FALSE(warmup_converged(falling));
  EXPECT_FALSE(warmup_converged({1.0}));
}

TrainConfig quick_config(TrainPhase phase, int64_t steps) {
  TrainConfig c;
  c.phase = phase;
  c.steps = steps;
  c.batch = 2;
  c.rollout = 2;
  return c;
}

TEST(Trainer, WarmupReportOmitsAlpha) {
  torch::manual_seed(0);
  Model model(small_config());
  Trainer t(model, quick_config(TrainPhase::kWarmup, 2));
  const auto data = toy_dataset(4, 3, 64, 1);
  const auto rec = t.step(data);
  EXPECT_FALSE(rec.alpha.has_value());
  EXPECT_TRUE(rec.loss_w.has_value());
  EXPECT_TRUE(std::isfinite(rec.bpp));
  const auto row = LossReport::csv_row(rec);
  EXPECT_NE(row.find(",warmup,"), std::string::npos);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
}

TEST(Trainer, NoGanRefusesAdversarialPhase) {
  auto cfg = small_config();
  cfg.ablation.use_gan = false;
  Model model(cfg);
  auto tc = quick_config(TrainPhase::kAdversarial, 1);
  tc.ablation = cfg.ablation;
  EXPECT_THROW(Trainer(model, tc), ConfigError);
  tc.phase = TrainPhase::kRateTargeted;
  EXPECT_NO_THROW(Trainer(model, tc));
}

TEST(Trainer, AblationMismatchRejected) {
  Model model(small_config());
  auto tc = quick_config(TrainPhase::kAdversarial, 1);
  tc.ablation = AblationConfig::without_hidden_motion();
  EXPECT_THROW(Trainer(model, tc), ConfigError);
}

TEST(Trainer, AlternationFreezesTheOtherNetwork) {
  torch::manual_seed(1);
  Model model(small_config());
  Trainer t(model, quick_config(TrainPhase::kAdversarial, 1));
  const auto g0 = parameter_hash(*model.backbone);
  const auto d0 = parameter_hash(*model.discriminator);
  std::string g_after_d, d_after_d, d_after_g, g_after_g;
  t.set_stage_hook([&](const std::string& stage) {
    if (stage == "after_d") {
      g_after_d = parameter_hash(*model.backbone);
      d_after_d = parameter_hash(*model.discriminator);
    } else {
      g_after_g = parameter_hash(*model.backbone);
      d_after_g = parameter_hash(*model.discriminator);
    }
  });
  const auto intra0 = parameter_hash(*model.intra);
  const auto rec = t.step(toy_dataset(4, 3, 64, 2));
  EXPECT_EQ(g_after_d, g0);
  EXPECT_NE(d_after_d, d0);
  EXPECT_EQ(d_after_g, d_after_d);
  EXPECT_NE(g_after_g, g_after_d);
  EXPECT_EQ(parameter_hash(*model.intra), intra0);
  ASSERT_TRUE(rec.alpha.has_value());
  const auto& p = preset(PresetId::kMedium);
  EXPECT_EQ(*rec.alpha, alpha_schedule(rec.bpp, p));
  EXPECT_TRUE(rec.loss_d && rec.loss_g && rec.adversarial && rec.d_accuracy);
}

// Every trainable parameter receives a finite gradient on one batch.
void expect_finite_gradients(const AblationConfig& ablation, PresetId id) {
  auto cfg = small_config();
  cfg.preset = id;
  cfg.ablation = ablation;
  cfg.backbone = backbone_for(ablation);
  torch::manual_seed(2);
  Model model(cfg);
  const auto data = toy_dataset(2, 3, 64, 3);
  model.train();
  auto r = rollout(model, data, 3, QuantMode::kTrain, QuantMode::kTrain);
  auto loss = r.intra_bpp.mean() + r.intra_mse.mean();
  for (size_t i = 0; i < r.p_bpp.size(); ++i) loss = loss + r.p_bpp[i].mean() + r.p_mse[i].mean();
  loss.backward();
  for (const auto& item : model.backbone->named_parameters()) {
    const auto& g = item.value().grad();
    if (!g.defined()) continue;
    EXPECT_TRUE(torch::isfinite(g).all().item<bool>()) << item.key();
  }
  for (const auto& item : model.intra->named_parameters()) {
    ASSERT_TRUE(item.value().grad().defined()) << item.key();
    EXPECT_TRUE(torch::isfinite(item.value().grad()).all().item<bool>()) << item.key();
  }
  if (!ablation.use_gan) return;
  Trainer t(model, [&] {
    auto tc = quick_config(TrainPhase::kAdversarial, 1);
    tc.ablation = ablation;
    return tc;
  }());
  const auto rec = t.step(data);
  EXPECT_TRUE(std::isfinite(*rec.loss_d));
  EXPECT_TRUE(std::isfinite(*rec.loss_g));
  for (const auto& item : model.discriminator->named_parameters()) {
    ASSERT_TRUE(item.value().grad().defined()) << item.key();
    EXPECT_TRUE(torch::isfinite(item.value().grad()).all().item<bool>()) << item.key();
  }
}

TEST(Trainer, FiniteGradientsForAllPresetsAndAblations) {
  for (auto id : {PresetId::kLow, PresetId::kMedium, PresetId::kHigh}) {
    expect_finite_gradients(AblationConfig::full(), id);
  }
  expect_finite_gradients(AblationConfig::without_hidden(), PresetId::kMedium);
  expect_finite_gradients(AblationConfig::without_hidden_motion(), PresetId::kMedium);
  expect_finite_gradients(AblationConfig::without_hidden_motion_spatial(), PresetId::kMedium);
}

// The rate-targeted (no discriminator) objective equals the rate-distortion
// sum term by term.
TEST(Trainer, WithoutGanObjectiveIsRateDistortion) {
  auto cfg = small_config();
  cfg.ablation.use_gan = false;
  torch::manual_seed(4);
  Model model(cfg);
  auto tc = quick_config(TrainPhase::kRateTargeted, 1);
  tc.ablation = cfg.ablation;
  Trainer t(model, tc);
  const auto rec = t.step(toy_dataset(4, 3, 64, 5));
  EXPECT_FALSE(rec.loss_d.has_value());
  EXPECT_FALSE(rec.adversarial.has_value());
  const auto& p = preset(PresetId::kMedium);
  // Per-frame terms are not exposed, so check the identity on the record's
  // means: sum over N frames of (alpha R + lambda' MSE) = N (alpha bpp + lambda' mse).
  EXPECT_NEAR(*rec.loss_g, tc.rollout * (*rec.alpha * rec.bpp + p.lambda_prime * rec.mse),
              1e-5 * std::abs(*rec.loss_g));
  const std::vector<FrameTerms> terms{
      {torch::tensor(0.2, torch::kDouble), torch::tensor(0.01, torch::kDouble)},
      {torch::tensor(0.1, torch::kDouble), torch::tensor(0.02, torch::kDouble)}};
  EXPECT_NEAR(g_loss(terms, {}, 1.0, p.lambda_prime, 0.0).item<double>(),
              warmup_loss(terms, p.lambda_prime).item<double>(), kTol);
}

TEST(Trainer, ResumeReproducesNextStep) {
  testing::TempDir dir;
  const auto data = toy_dataset(4, 3, 64, 6);
  auto tc = quick_config(TrainPhase::kWarmup, 4);
  tc.out_dir = dir.path();
  torch::manual_seed(5);
  Model a(small_config());
  Trainer ta(a, tc);
  ta.step(data);
  ta.step(data);
  ta.save(dir / "mid.bin");
  const auto expected = ta.step(data);

  Model b = load_checkpoint(dir / "mid.bin");
  Trainer tb(b, tc);
  tb.resume(dir / "mid.bin");
  EXPECT_EQ(tb.step_index(), 2);
  const auto got = tb.step(data);
  EXPECT_NEAR(*got.loss_w, *expected.loss_w, 1e-5 * std::abs(*expected.loss_w));
  EXPECT_EQ(parameter_hash(*b.backbone), parameter_hash(*a.backbone));
}

TEST(Trainer, RunWritesArtifacts) {
  testing::TempDir dir;
  auto tc = quick_config(TrainPhase::kWarmup, 3);
  tc.out_dir = dir.path();
  tc.checkpoint_every = 2;
  torch::manual_seed(6);
  Model model(small_config());
  Trainer t(model, tc);
  const auto final_path = t.run(toy_dataset(4, 3, 64, 7));
  EXPECT_EQ(final_path.filename(), "ckpt_warmup_3.bin");
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt_warmup_2.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary_warmup.json"));
  std::ifstream csv(dir / "loss_warmup.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, LossReport::csv_header());
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Trainer, LearningRateDecaysForFinalFifth) {
  torch::manual_seed(7);
  Model model(small_config());
  Trainer t(model, quick_config(TrainPhase::kWarmup, 5));
  const auto data = toy_dataset(2, 3, 64, 8);
  std::vector<double> lrs;
  for (int i = 0; i < 5; ++i) lrs.push_back(t.step(data).lr);
  EXPECT_EQ(lrs, (std::vector<double>{1e-4, 1e-4, 1e-4, 1e-4, 1e-5}));
}

TEST(Trainer, RolloutTooLongForClips) {
  Model model(small_config());
  auto tc = quick_config(TrainPhase::kWarmup, 1);
  tc.rollout = 6;
  Trainer t(model, tc);
  EXPECT_THROW(t.step(toy_dataset(2, 3, 64, 9)), ConfigError);
}

// Smoke run: the warm-up objective falls over 200 steps for three seeds.
TEST(TrainerSmoke, WarmupLossDecreases) {
  const auto data = toy_dataset(16, 7, 64, 11);
  for (uint64_t seed : {1, 2, 3}) {
    torch::manual_seed(seed);
    Model model(small_config());
    auto tc = quick_config(TrainPhase::kWarmup, 200);
    tc.seed = seed;
    tc.rollout = 3;
    tc.lr_warmup = 1e-3;
    Trainer t(model, tc);
    std::vector<double> losses;
    t.run(data, [&](const LossRecord& r) { losses.push_back(*r.loss_w); });
    ASSERT_EQ(losses.size(), 200u);
    double start = 0.0, end = 0.0;
    for (int i = 0; i < 20; ++i) {
      start += losses[i];
      end += losses[180 + i];
    }
    EXPECT_LT(end, start) << "seed " << seed;
  }
}

}  // namespace
}  // namespace plvc
