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

#include "plvc/model.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include "plvc/error.hpp"

namespace plvc {
namespace fs = std::filesystem;

void ModelConfig::validate() const {
  if (width <= 0 || height <= 0 || width % kDownsampling != 0 || height % kDownsampling != 0) {
    throw ConfigError("model frame size " + std::to_string(width) + "x" + std::to_string(height) +
                      " must be positive multiples of " + std::to_string(kDownsampling));
  }
  if (width > 65535 || height > 65535) throw ConfigError("frame size exceeds 16 bits");
  if (generator.channels <= 0 || generator.latent_channels <= 0 || generator.flow_levels <= 0 ||
      generator.flow_channels <= 0 || generator.refine_channels <= 0 || discriminator_hidden <= 0 ||
      discriminator_width <= 0) {
    throw ConfigError("model channel counts must be positive");
  }
  ablation.validate();
  if (backbone == BackboneId::kRecurrent && !ablation.generator_recurrent()) {
    throw ConfigError("ablation no_hidden with g_and_d scope requires the non-recurrent backbone");
  }
  if (precision_tag != kPrecisionFp32) throw ConfigError("only fp32 evaluation is supported");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"width", width},
          {"height", height},
          {"generator", generator.to_json()},
          {"preset", plvc::preset(preset).name},
          {"ablation", ablation.to_json()},
          {"backbone", to_string(backbone)},
          {"backbone_id", static_cast<int>(backbone)},
          {"intra_mode", to_string(intra_mode)},
          {"discriminator_hidden", discriminator_hidden},
          {"discriminator_width", discriminator_width},
          {"precision_tag", precision_tag}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.width = j.at("width").get<int64_t>();
    c.height = j.at("height").get<int64_t>();
    c.generator = GeneratorConfig::from_json(j.at("generator"));
    c.preset = preset_by_name(j.at("preset").get<std::string>()).id;
    c.ablation = AblationConfig::from_json(j.at("ablation"));
    const int id = j.at("backbone_id").get<int>();
    if (id != 0 && id != 1) throw ConfigError("unknown backbone id " + std::to_string(id));
    c.backbone = static_cast<BackboneId>(id);
    c.intra_mode = parse_intra_mode(j.at("intra_mode").get<std::string>());
    c.discriminator_hidden = j.at("discriminator_hidden").get<int64_t>();
    c.discriminator_width = j.value("discriminator_width", int64_t{64});
    c.precision_tag = j.at("precision_tag").get<uint8_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

BackboneId backbone_for(const AblationConfig& ablation) {
  return ablation.generator_recurrent() ? BackboneId::kRecurrent : BackboneId::kNonRecurrent;
}

Model::Model(const ModelConfig& cfg) : config(cfg) {
  config.validate();
  backbone = make_backbone(config.backbone, config.generator);
  intra = IntraCodec(config.generator, config.intra_mode);
  discriminator =
      Discriminator(config.ablation, 2 * config.generator.latent_channels, config.discriminator_hidden,
                    config.discriminator_width);
}

void Model::train(bool on) {
  backbone->train(on);
  intra->train(on);
  discriminator->train(on);
}

namespace {

void write_optimizer(torch::serialize::OutputArchive& root, const std::string& key,
                     torch::optim::Optimizer* opt) {
  if (!opt) return;
  torch::serialize::OutputArchive sub;
  opt->save(sub);
  root.write(key, sub);
}

}  // namespace

void save_checkpoint(const fs::path& path, Model& model, const CheckpointInfo& info,
                     const OptimizerRefs& optimizers) {
  torch::serialize::OutputArchive root;
  nlohmann::json meta = {{"model", model.config.to_json()},
                         {"phase", info.phase},
                         {"step", info.step},
                         {"extra", info.extra},
                         {"format", 1}};
  root.write("meta", c10::IValue(meta.dump()));
  torch::serialize::OutputArchive gen, intra, disc;
  model.backbone->save(gen);
  model.intra->save(intra);
  model.discriminator->save(disc);
  root.write("generator", gen);
  root.write("intra", intra);
  root.write("discriminator", disc);
  write_optimizer(root, "optimizer_generator", optimizers.generator);
  write_optimizer(root, "optimizer_discriminator", optimizers.discriminator);
  write_optimizer(root, "optimizer_flow", optimizers.flow);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Write then rename so an interrupted save never leaves a torn file.
  const fs::path tmp = path.string() + ".tmp";
  try {
    root.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot write checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  fs::rename(tmp, path);
}

namespace {

nlohmann::json read_meta(torch::serialize::InputArchive& root, const fs::path& path) {
  c10::IValue value;
  if (!root.try_read("meta", value) || !value.isString()) {
    throw ModelError(path.string() + " is not a model checkpoint (missing metadata)");
  }
  try {
    return nlohmann::json::parse(value.toStringRef());
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("corrupt checkpoint metadata: " + std::string(e.what()));
  }
}

void open_archive(torch::serialize::InputArchive& root, const fs::path& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path.string());
  try {
    root.load_from(path.string());
  } catch (const c10::Error& e) {
    throw ModelError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
}

}  // namespace

ModelConfig read_checkpoint_config(const fs::path& path) {
  torch::serialize::InputArchive root;
  open_archive(root, path);
  return ModelConfig::from_json(read_meta(root, path).at("model"));
}

Model load_checkpoint(const fs::path& path, CheckpointInfo* info) {
  torch::serialize::InputArchive root;
  open_archive(root, path);
  const auto meta = read_meta(root, path);
  Model model(ModelConfig::from_json(meta.at("model")));
  try {
    torch::serialize::InputArchive gen, intra, disc;
    root.read("generator", gen);
    root.read("intra", intra);
    root.read("discriminator", disc);
    model.backbone->load(gen);
    model.intra->load(intra);
    model.discriminator->load(disc);
  } catch (const c10::Error& e) {
    throw ModelError(std::string("checkpoint parameters do not match its config: ") +
                     e.what_without_backtrace());
  }
  if (info) {
    info->phase = meta.at("phase").get<std::string>();
    info->step = meta.at("step").get<int64_t>();
    info->extra = meta.value("extra", nlohmann::json::object());
  }
  return model;
}

void load_optimizer_states(const fs::path& path, const OptimizerRefs& optimizers) {
  torch::serialize::InputArchive root;
  open_archive(root, path);
  auto restore = [&](const std::string& key, torch::optim::Optimizer* opt) {
    if (!opt) return;
    torch::serialize::InputArchive sub;
    if (!root.try_read(key, sub)) {
      throw ModelError("checkpoint " + path.string() + " has no " + key + " state");
    }
    opt->load(sub);
  };
  restore("optimizer_generator", optimizers.generator);
  restore("optimizer_discriminator", optimizers.discriminator);
  restore("optimizer_flow", optimizers.flow);
}

std::string checkpoint_name(const std::string& phase, int64_t step) {
  return "ckpt_" + phase + "_" + std::to_string(step) + ".bin";
}

std::string parameter_hash(const torch::nn::Module& module) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  auto feed = [&](const std::string& name, const torch::Tensor& t) {
    EVP_DigestUpdate(ctx.get(), name.data(), name.size());
    const auto c = t.detach().to(torch::kCPU).contiguous();
    EVP_DigestUpdate(ctx.get(), c.data_ptr(), static_cast<size_t>(c.nbytes()));
  };
  for (const auto& p : module.named_parameters()) feed(p.key(), p.value());
  for (const auto& b : module.named_buffers()) feed(b.key(), b.value());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace plvc
