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

#include "plvc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "plvc/error.hpp"

namespace plvc {
namespace fs = std::filesystem;

namespace {

constexpr double kLogFloor = 1e-12;

void check_scores(const std::vector<torch::Tensor>& scores) {
  for (const auto& s : scores) {
    if (!torch::isfinite(s).all().item<bool>() || (s < 0).any().item<bool>() ||
        (s > 1).any().item<bool>()) {
      throw ModelError("discriminator scores must lie in [0, 1]");
    }
  }
}

void check_scores(const std::vector<double>& scores) {
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ModelError("discriminator scores must lie in [0, 1]");
  }
}

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }
torch::Tensor safe_log(const torch::Tensor& v) { return torch::log(v.clamp_min(kLogFloor)); }

}  // namespace

torch::Tensor warmup_loss(const std::vector<FrameTerms>& frames, double lambda) {
  if (frames.empty()) throw ModelError("warmup_loss: empty rollout");
  auto loss = torch::zeros({}, frames.front().bpp.options());
  for (const auto& f : frames) loss = loss + f.bpp + lambda * f.mse;
  return loss;
}

double warmup_loss(const std::vector<double>& bpp, const std::vector<double>& mse, double lambda) {
  if (bpp.empty() || bpp.size() != mse.size()) throw ModelError("warmup_loss: bad term lists");
  double loss = 0.0;
  for (size_t i = 0; i < bpp.size(); ++i) {
    if (!std::isfinite(bpp[i]) || !std::isfinite(mse[i])) throw ModelError("warmup_loss: non-finite term");
    loss += bpp[i] + lambda * mse[i];
  }
  return loss;
}

torch::Tensor d_loss(const std::vector<torch::Tensor>& real, const std::vector<torch::Tensor>& fake) {
  if (real.empty() || real.size() != fake.size()) throw ModelError("d_loss: score lists differ");
  check_scores(real);
  check_scores(fake);
  auto loss = torch::zeros({}, real.front().options());
  for (size_t i = 0; i < real.size(); ++i) {
    loss = loss - safe_log(1.0 - fake[i]).mean() - safe_log(real[i]).mean();
  }
  return loss;
}

double d_loss(const std::vector<double>& real, const std::vector<double>& fake) {
  if (real.empty() || real.size() != fake.size()) throw ModelError("d_loss: score lists differ");
  check_scores(real);
  check_scores(fake);
  double loss = 0.0;
  for (size_t i = 0; i < real.size(); ++i) loss += -safe_log(1.0 - fake[i]) - safe_log(real[i]);
  return loss;
}

torch::Tensor g_loss(const std::vector<FrameTerms>& frames, const std::vector<torch::Tensor>& fake,
                     double alpha, double lambda_prime, double beta) {
  if (frames.empty()) throw ModelError("g_loss: empty rollout");
  const bool adversarial = beta != 0.0 || !fake.empty();
  if (adversarial && fake.size() != frames.size()) throw ModelError("g_loss: score list size");
  check_scores(fake);
  auto loss = torch::zeros({}, frames.front().bpp.options());
  for (size_t i = 0; i < frames.size(); ++i) {
    loss = loss + alpha * frames[i].bpp + lambda_prime * frames[i].mse;
    if (adversarial) loss = loss - beta * safe_log(fake[i]).mean();
  }
  return loss;
}

double g_loss(const std::vector<double>& bpp, const std::vector<double>& mse,
              const std::vector<double>& fake, double alpha, double lambda_prime, double beta) {
  if (bpp.empty() || bpp.size() != mse.size() || bpp.size() != fake.size()) {
    throw ModelError("g_loss: bad term lists");
  }
  check_scores(fake);
  double loss = 0.0;
  for (size_t i = 0; i < bpp.size(); ++i) {
    loss += alpha * bpp[i] + lambda_prime * mse[i] - beta * safe_log(fake[i]);
  }
  return loss;
}

std::string to_string(TrainPhase phase) {
  switch (phase) {
    case TrainPhase::kWarmup: return "warmup";
    case TrainPhase::kAdversarial: return "adversarial";
    case TrainPhase::kRateTargeted: return "rate_targeted";
  }
  return "unknown";
}

TrainPhase parse_train_phase(const std::string& s) {
  if (s == "warmup") return TrainPhase::kWarmup;
  if (s == "adversarial" || s == "gan") return TrainPhase::kAdversarial;
  if (s == "rate_targeted") return TrainPhase::kRateTargeted;
  throw ConfigError("unknown training phase '" + s + "' (expected warmup, gan or rate_targeted)");
}

void TrainConfig::validate(int64_t frames_per_clip) const {
  if (steps < 0 || batch < 1 || rollout < 1) throw ConfigError("steps, batch and rollout must be positive");
  if (rollout > frames_per_clip - 1) {
    throw ConfigError("rollout of " + std::to_string(rollout) + " P-frames needs clips of at least " +
                      std::to_string(rollout + 1) + " frames");
  }
  if (!(lr_warmup > 0 && lr_generator > 0 && lr_discriminator > 0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(rate_scale > 0)) throw ConfigError("rate_scale must be positive");
  if (lr_decay_fraction < 0 || lr_decay_fraction > 1) throw ConfigError("lr_decay_fraction in [0,1]");
  if (flow_pretrain_steps < 0) throw ConfigError("flow_pretrain_steps must be non-negative");
  ablation.validate();
  if (phase == TrainPhase::kAdversarial && !ablation.use_gan) {
    throw ConfigError("the no_gan ablation cannot run the adversarial phase; use warm-up training");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"phase", to_string(phase)},
          {"preset", plvc::preset(preset).name},
          {"steps", steps},
          {"batch", batch},
          {"rollout", rollout},
          {"lr_warmup", lr_warmup},
          {"lr_generator", lr_generator},
          {"lr_discriminator", lr_discriminator},
          {"lr_decay_fraction", lr_decay_fraction},
          {"grad_clip", grad_clip},
          {"flow_pretrain_steps", flow_pretrain_steps},
          {"seed", seed},
          {"rate_scale", rate_scale},
          {"ablation", ablation.to_json()}};
}

std::string LossReport::csv_header() {
  return "step,phase,loss_w,loss_d,loss_g,bpp,mse,adversarial,alpha,d_accuracy,lr";
}

std::string LossReport::csv_row(const LossRecord& r) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  return std::to_string(r.step) + "," + r.phase + "," + opt(r.loss_w) + "," + opt(r.loss_d) + "," +
         opt(r.loss_g) + "," + num(r.bpp) + "," + num(r.mse) + "," + opt(r.adversarial) + "," +
         opt(r.alpha) + "," + opt(r.d_accuracy) + "," + num(r.lr);
}

void LossReport::write_csv(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << csv_header() << "\n";
  for (const auto& r : records_) f << csv_row(r) << "\n";
}

bool warmup_converged(const std::vector<double>& losses) {
  const size_t w = std::max<size_t>(1, losses.size() / 10);
  if (losses.size() < 2 * w) return false;
  auto mean = [&](size_t begin) {
    double s = 0.0;
    for (size_t i = begin; i < begin + w; ++i) s += losses[i];
    return s / static_cast<double>(w);
  };
  const double before = mean(losses.size() - 2 * w);
  const double after = mean(losses.size() - w);
  return (before - after) / std::max(std::abs(before), 1e-12) < 0.01;
}

nlohmann::json LossReport::summary() const {
  nlohmann::json j = nlohmann::json::object();
  j["records"] = records_.size();
  if (records_.empty()) return j;
  const auto& last = records_.back();
  j["final_step"] = last.step;
  j["final_phase"] = last.phase;
  j["final_bpp"] = last.bpp;
  j["final_mse"] = last.mse;
  const size_t tail = std::max<size_t>(1, records_.size() / 5);
  double bpp = 0.0, mse = 0.0;
  for (size_t i = records_.size() - tail; i < records_.size(); ++i) {
    bpp += records_[i].bpp;
    mse += records_[i].mse;
  }
  j["tail_mean_bpp"] = bpp / static_cast<double>(tail);
  j["tail_mean_mse"] = mse / static_cast<double>(tail);
  std::vector<double> lw;
  for (const auto& r : records_) {
    if (r.loss_w) lw.push_back(*r.loss_w);
  }
  if (!lw.empty()) {
    j["first_loss_w"] = lw.front();
    j["final_loss_w"] = lw.back();
    j["warmup_converged"] = warmup_converged(lw);
  }
  if (last.loss_g) j["final_loss_g"] = *last.loss_g;
  if (last.loss_d) j["final_loss_d"] = *last.loss_d;
  return j;
}

std::vector<int64_t> sample_batch(uint64_t seed, int64_t step, int64_t clip_count, int64_t batch) {
  if (clip_count <= 0) throw ConfigError("dataset is empty");
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32), 0x62617463u};
  std::mt19937_64 rng(seq);
  std::vector<int64_t> idx;
  idx.reserve(static_cast<size_t>(batch));
  for (int64_t i = 0; i < batch; ++i) idx.push_back(static_cast<int64_t>(rng() % static_cast<uint64_t>(clip_count)));
  return idx;
}

RolloutResult rollout(Model& model, const torch::Tensor& clips, int64_t frames, QuantMode mode,
                      QuantMode intra_mode) {
  if (clips.dim() != 5 || clips.size(1) < frames || frames < 2) {
    throw ModelError("rollout: clips must be [B,T,3,H,W] with T >= frames >= 2");
  }
  const int64_t b = clips.size(0), h = clips.size(3), w = clips.size(4);
  const double pixels = static_cast<double>(h * w);
  RolloutResult r;
  const auto x0 = clips.select(1, 0);
  if (model.config.intra_mode == IntraMode::kLossless) {
    r.reconstructions.push_back(quantize_8bit(x0));
    r.intra_bpp = torch::full({b}, 24.0, x0.options());
  } else {
    const auto out = model.intra->forward(x0, intra_mode);
    r.reconstructions.push_back(out.reconstruction);
    r.intra_bpp = out.bits / pixels;
  }
  r.intra_mse = (r.reconstructions.front() - x0).pow(2).mean({1, 2, 3});
  auto reference = r.reconstructions.front().detach();
  auto chain = model.backbone->init_chain(b, h, w, x0.options());
  for (int64_t i = 1; i < frames; ++i) {
    const auto x = clips.select(1, i);
    auto out = model.backbone->forward(x, reference, chain, mode);
    r.flows.push_back(out.flow);
    r.latents.push_back(out.latents);
    r.p_bpp.push_back(out.estimated_bits / pixels);
    r.p_mse.push_back((out.reconstruction - x).pow(2).mean({1, 2, 3}));
    r.reconstructions.push_back(out.reconstruction);
    reference = out.reconstruction;
    chain = out.next;
  }
  return r;
}

namespace {

std::vector<FrameTerms> frame_terms(const RolloutResult& r) {
  std::vector<FrameTerms> terms;
  for (size_t i = 0; i < r.p_bpp.size(); ++i) terms.push_back({r.p_bpp[i].mean(), r.p_mse[i].mean()});
  return terms;
}

double mean_of(const std::vector<torch::Tensor>& v) {
  double s = 0.0;
  for (const auto& t : v) s += t.mean().item<double>();
  return s / static_cast<double>(v.size());
}

struct DiscriminatorInputs {
  std::vector<DiscriminatorStep> real;
  std::vector<DiscriminatorStep> fake;
};

// Real and fake pairs share the condition built from the generator's
// latents and the encoder-side flow.
DiscriminatorInputs discriminator_inputs(const torch::Tensor& clips, const RolloutResult& r,
                                         const AblationConfig& ablation, bool detach_fake) {
  DiscriminatorInputs in;
  for (size_t i = 1; i < r.reconstructions.size(); ++i) {
    const auto cond = build_condition(r.latents[i - 1].detach(), r.flows[i - 1].detach(), ablation);
    const auto x = clips.select(1, static_cast<int64_t>(i));
    const auto x_prev = clips.select(1, static_cast<int64_t>(i) - 1);
    auto fake = r.reconstructions[i];
    auto fake_prev = r.reconstructions[i - 1];
    if (detach_fake) {
      fake = fake.detach();
      fake_prev = fake_prev.detach();
    }
    in.real.push_back({x, x_prev, cond});
    in.fake.push_back({fake, fake_prev, cond});
  }
  return in;
}

double accuracy(const std::vector<torch::Tensor>& real, const std::vector<torch::Tensor>& fake) {
  double correct = 0.0, total = 0.0;
  for (size_t i = 0; i < real.size(); ++i) {
    correct += (real[i] > 0.5).sum().item<double>() + (fake[i] < 0.5).sum().item<double>();
    total += static_cast<double>(real[i].numel() + fake[i].numel());
  }
  return total > 0 ? correct / total : 0.0;
}

uint64_t step_seed(uint64_t seed, int64_t step) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32), 0x746f7263u};
  std::mt19937_64 rng(seq);
  return rng();
}

std::vector<torch::Tensor> params_of(const torch::nn::Module& m) { return m.parameters(); }

void append(std::vector<torch::Tensor>& dst, const std::vector<torch::Tensor>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Trainer::Trainer(Model& model, const TrainConfig& config) : model_(model), config_(config) {
  if (config_.phase == TrainPhase::kAdversarial && !config_.ablation.use_gan) {
    throw ConfigError("the no_gan ablation cannot run the adversarial phase; use warm-up training");
  }
  if (!(config_.ablation == model.config.ablation)) {
    throw ConfigError("training ablation does not match the model's ablation config");
  }
  std::vector<torch::Tensor> gen = params_of(*model_.backbone);
  if (config_.phase == TrainPhase::kWarmup) {
    append(gen, params_of(*model_.intra));
    if (auto rb = std::dynamic_pointer_cast<RecurrentBackboneImpl>(model_.backbone)) {
      flow_opt_ = std::make_unique<torch::optim::Adam>(rb->flow_net()->parameters(),
                                                       torch::optim::AdamOptions(config_.lr_warmup));
    }
  }
  const double g_lr = config_.phase == TrainPhase::kWarmup ? config_.lr_warmup : config_.lr_generator;
  gen_opt_ = std::make_unique<torch::optim::Adam>(gen, torch::optim::AdamOptions(g_lr));
  if (config_.phase == TrainPhase::kAdversarial) {
    disc_opt_ = std::make_unique<torch::optim::Adam>(
        params_of(*model_.discriminator), torch::optim::AdamOptions(config_.lr_discriminator));
  }
}

double Trainer::current_lr(double base) const {
  const auto decay_from =
      static_cast<int64_t>(std::llround((1.0 - config_.lr_decay_fraction) * static_cast<double>(config_.steps)));
  return step_ >= decay_from ? base * 0.1 : base;
}

void Trainer::set_lr(torch::optim::Optimizer& opt, double lr) {
  for (auto& group : opt.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

void Trainer::check_finite(const torch::Tensor& loss, const char* what) {
  if (std::isfinite(loss.item<double>())) return;
  if (!config_.out_dir.empty()) {
    const auto dump = config_.out_dir / ("diverged_" + to_string(config_.phase) + "_" +
                                         std::to_string(step_) + ".bin");
    save(dump);
    std::cerr << "{\"level\":\"error\",\"event\":\"divergence\",\"dump\":\"" << dump.string()
              << "\"}\n";
  }
  throw ModelError(std::string("training diverged: non-finite ") + what + " at step " +
                   std::to_string(step_));
}

LossRecord Trainer::flow_step(const torch::Tensor& batch) {
  auto backbone = std::dynamic_pointer_cast<RecurrentBackboneImpl>(model_.backbone);
  const double lr = current_lr(config_.lr_warmup);
  set_lr(*flow_opt_, lr);
  auto flow = backbone->flow_net();
  auto loss = torch::zeros({});
  for (int64_t i = 1; i <= config_.rollout; ++i) {
    const auto x = batch.select(1, i);
    const auto ref = batch.select(1, i - 1);
    loss = loss + (warp(ref, flow->forward(x, ref)) - x).pow(2).mean();
  }
  loss = loss / static_cast<double>(config_.rollout);
  check_finite(loss, "flow loss");
  flow_opt_->zero_grad();
  loss.backward();
  torch::nn::utils::clip_grad_norm_(flow->parameters(), config_.grad_clip);
  flow_opt_->step();
  LossRecord rec;
  rec.step = step_;
  rec.phase = "flow_pretrain";
  rec.mse = loss.item<double>();
  rec.lr = lr;
  return rec;
}

LossRecord Trainer::warmup_step(const torch::Tensor& batch) {
  const auto& p = preset(model_.config.preset);
  const double lr = current_lr(config_.lr_warmup);
  set_lr(*gen_opt_, lr);
  model_.train();
  auto r = rollout(model_, batch, config_.rollout + 1, QuantMode::kTrain, QuantMode::kTrain);
  const auto terms = frame_terms(r);
  const auto lw = warmup_loss(terms, p.lambda);
  auto total = lw;
  if (model_.config.intra_mode == IntraMode::kIntraAe) {
    total = total + r.intra_bpp.mean() + p.lambda * r.intra_mse.mean();
  }
  check_finite(total, "warm-up loss");
  gen_opt_->zero_grad();
  total.backward();
  torch::nn::utils::clip_grad_norm_(gen_opt_->param_groups().front().params(), config_.grad_clip);
  gen_opt_->step();

  LossRecord rec;
  rec.step = step_;
  rec.phase = "warmup";
  rec.loss_w = lw.item<double>();
  rec.bpp = mean_of(r.p_bpp);
  rec.mse = mean_of(r.p_mse);
  rec.lr = lr;
  return rec;
}

LossRecord Trainer::adversarial_step(const torch::Tensor& batch, bool use_discriminator) {
  const auto& p = preset(model_.config.preset);
  const double g_lr = current_lr(config_.lr_generator);
  set_lr(*gen_opt_, g_lr);
  model_.train();
  // The intra codec is frozen after warm-up.
  auto r = rollout(model_, batch, config_.rollout + 1, QuantMode::kTrain, QuantMode::kTest);
  r.reconstructions.front() = r.reconstructions.front().detach();
  const auto terms = frame_terms(r);

  LossRecord rec;
  rec.step = step_;
  rec.phase = to_string(config_.phase);
  rec.bpp = mean_of(r.p_bpp);
  rec.mse = mean_of(r.p_mse);
  rec.lr = g_lr;
  const double alpha = alpha_schedule(rec.bpp, p, config_.rate_scale);
  rec.alpha = alpha;

  std::vector<torch::Tensor> fake_scores;
  if (use_discriminator) {
    auto& d = model_.discriminator;
    set_lr(*disc_opt_, current_lr(config_.lr_discriminator));
    d->power_iteration(1);
    const auto detached = discriminator_inputs(batch, r, config_.ablation, true);
    const auto real = rollout_discriminator(d, detached.real);
    const auto fake = rollout_discriminator(d, detached.fake);
    const auto ld = d_loss(real, fake);
    check_finite(ld, "discriminator loss");
    disc_opt_->zero_grad();
    ld.backward();
    torch::nn::utils::clip_grad_norm_(d->parameters(), config_.grad_clip);
    disc_opt_->step();
    rec.loss_d = ld.item<double>();
    rec.d_accuracy = accuracy(real, fake);
    if (hook_) hook_("after_d");

    for (auto& prm : d->parameters()) prm.set_requires_grad(false);
    const auto live = discriminator_inputs(batch, r, config_.ablation, false);
    fake_scores = rollout_discriminator(d, live.fake);
  }
  const double beta = use_discriminator ? p.beta : 0.0;
  const auto lg = g_loss(terms, fake_scores, alpha, p.lambda_prime, beta);
  if (use_discriminator) {
    double adv = 0.0;
    for (const auto& s : fake_scores) adv -= beta * safe_log(s.detach()).mean().item<double>();
    rec.adversarial = adv;
  }
  try {
    check_finite(lg, "generator loss");
    gen_opt_->zero_grad();
    lg.backward();
  } catch (...) {
    for (auto& prm : model_.discriminator->parameters()) prm.set_requires_grad(true);
    throw;
  }
  for (auto& prm : model_.discriminator->parameters()) prm.set_requires_grad(true);
  torch::nn::utils::clip_grad_norm_(gen_opt_->param_groups().front().params(), config_.grad_clip);
  gen_opt_->step();
  rec.loss_g = lg.item<double>();
  if (hook_) hook_("after_g");
  return rec;
}

LossRecord Trainer::step(const torch::Tensor& data) {
  if (data.dim() != 5) throw ModelError("training data must be [clips, T, 3, H, W]");
  config_.validate(data.size(1));
  torch::manual_seed(step_seed(config_.seed, step_));
  const auto idx = sample_batch(config_.seed, step_, data.size(0), config_.batch);
  const auto batch = data.index_select(0, torch::tensor(idx, torch::kLong));
  LossRecord rec;
  switch (config_.phase) {
    case TrainPhase::kWarmup:
      rec = step_ < config_.flow_pretrain_steps && flow_opt_ ? flow_step(batch) : warmup_step(batch);
      break;
    case TrainPhase::kAdversarial: rec = adversarial_step(batch, true); break;
    case TrainPhase::kRateTargeted: rec = adversarial_step(batch, false); break;
  }
  ++step_;
  report_.add(rec);
  return rec;
}

fs::path Trainer::run(const torch::Tensor& data,
                      const std::function<void(const LossRecord&)>& on_step) {
  const std::string phase = to_string(config_.phase);
  while (step_ < config_.steps) {
    const auto rec = step(data);
    if (on_step) on_step(rec);
    if (config_.log_every > 0 && (step_ % config_.log_every == 0 || step_ == config_.steps)) {
      std::cerr << "{\"event\":\"train_step\",\"csv\":\"" << LossReport::csv_row(rec) << "\"}\n";
    }
    if (!config_.out_dir.empty() && config_.checkpoint_every > 0 &&
        step_ % config_.checkpoint_every == 0 && step_ < config_.steps) {
      save(config_.out_dir / checkpoint_name(phase, step_));
    }
  }
  if (config_.out_dir.empty()) return {};
  const auto final_path = config_.out_dir / checkpoint_name(phase, step_);
  save(final_path);
  report_.write_csv(config_.out_dir / ("loss_" + phase + ".csv"));
  auto summary = report_.summary();
  summary["config"] = config_.to_json();
  summary["checkpoint"] = final_path.filename().string();
  std::ofstream f(config_.out_dir / ("summary_" + phase + ".json"));
  f << summary.dump(2) << "\n";
  return final_path;
}

void Trainer::save(const fs::path& path) {
  CheckpointInfo info;
  info.phase = to_string(config_.phase);
  info.step = step_;
  info.extra = {{"train_config", config_.to_json()}};
  save_checkpoint(path, model_, info, {gen_opt_.get(), disc_opt_.get(), flow_opt_.get()});
}

void Trainer::resume(const fs::path& path) {
  CheckpointInfo info;
  const auto stored = load_checkpoint(path, &info);
  if (info.phase != to_string(config_.phase)) {
    throw ConfigError("cannot resume a " + to_string(config_.phase) + " run from a " + info.phase +
                      " checkpoint");
  }
  if (!(stored.config == model_.config)) throw ConfigError("checkpoint config differs from the model");
  load_optimizer_states(path, {gen_opt_.get(), disc_opt_.get(), flow_opt_.get()});
  step_ = info.step;
}

double discriminator_accuracy(Model& model, const torch::Tensor& clips, int64_t frames) {
  torch::NoGradGuard no_grad;
  model.eval();
  std::vector<torch::Tensor> real_all, fake_all;
  const int64_t chunk = 8;
  for (int64_t s = 0; s < clips.size(0); s += chunk) {
    const auto part = clips.slice(0, s, std::min(s + chunk, clips.size(0)));
    const auto r = rollout(model, part, frames, QuantMode::kTest, QuantMode::kTest);
    const auto in = discriminator_inputs(part, r, model.config.ablation, true);
    const auto real = rollout_discriminator(model.discriminator, in.real);
    const auto fake = rollout_discriminator(model.discriminator, in.fake);
    real_all.insert(real_all.end(), real.begin(), real.end());
    fake_all.insert(fake_all.end(), fake.begin(), fake.end());
  }
  return accuracy(real_all, fake_all);
}

}  // namespace plvc
