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

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plvc/bitstream.hpp"
#include "plvc/coding_plan.hpp"
#include "plvc/dataset.hpp"
#include "plvc/error.hpp"
#include "plvc/frame.hpp"
#include "plvc/metrics.hpp"
#include "plvc/model.hpp"
#include "plvc/preset.hpp"
#include "plvc/report.hpp"
#include "plvc/training.hpp"

namespace plvc::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SynthOptions {
  std::string out;
  int64_t clips = 16;
  int64_t frames = 7;
  int64_t size = 64;
  uint64_t seed = 1;
  std::string motion = "mixed";
  bool force = false;
};

struct TrainOptions {
  std::string data;
  std::string preset = "medium";
  std::string phase = "warmup";
  int64_t steps = 200;
  std::string ckpt;
  std::string resume;
  std::vector<std::string> ablate;
  std::string hidden_scope = "g_and_d";
  double rate_scale = 1.0;
  uint64_t seed = 1;
  int64_t batch = 4;
  int64_t rollout = 6;
  double lr = 1e-4;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  int64_t flow_pretrain = 0;
  int64_t checkpoint_every = 0;
  int64_t log_every = 10;
  int64_t channels = 64;
  int64_t latent = 32;
  std::string intra = "intra_ae";
};

struct EncodeOptions {
  std::string ckpt;
  std::string input;
  std::string out;
  int64_t gop = 9;
  std::string mode = "ippp";
  std::string recon;
};

struct DecodeOptions {
  std::string ckpt;
  std::string input;
  std::string out;
};

struct EvalOptions {
  std::string raw;
  std::string rec;
  std::string bits;
  std::string report;
  uint64_t embedder_seed = 0;
  double rate_scale = 1.0;
};

struct ProfileOptions {
  std::string video;
  int64_t row = 0;
  std::string out;
};

void log_event(std::ostream& log, json event) {
  log << event.dump() << "\n";
  log.flush();
}

// --- config overlay -------------------------------------------------------

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file argument");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

std::string scalar_token(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ConfigError("config key '" + key + "' must be a scalar or an array of scalars");
}

// Appends file values for every flag absent from the command line, so that
// the command line wins over the file and the file over the defaults.
std::vector<std::string> apply_config_file(const std::vector<std::string>& args,
                                           CLI::App& sub) {
  const auto path = config_path(args);
  if (!path) return args;
  std::ifstream f(*path);
  if (!f) throw IoError("cannot open config file: " + *path);
  json config;
  try {
    config = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + *path + " is not valid JSON: " + e.what());
  }
  if (!config.is_object()) throw ConfigError("config file must hold a JSON object");

  std::vector<std::string> merged = args;
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr || key == "config") {
      throw ConfigError("unknown config key '" + key + "' for " + sub.get_name());
    }
    if (given_on_command_line(args, flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (!value.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
      if (value.get<bool>()) merged.push_back(flag);
      continue;
    }
    if (value.is_array()) {
      for (const auto& item : value) {
        merged.push_back(flag);
        merged.push_back(scalar_token(item, key));
      }
    } else {
      merged.push_back(flag);
      merged.push_back(scalar_token(value, key));
    }
  }
  return merged;
}

// --- subcommands ----------------------------------------------------------

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& log) {
  DatasetSpec spec;
  spec.clip_count = o.clips;
  spec.frames_per_clip = o.frames;
  spec.frame_size = o.size;
  spec.seed = o.seed;
  spec.motion_profile = parse_motion_profile(o.motion);
  spec.validate();
  log_event(log, {{"event", "resolved_config"},
                  {"command", "synth"},
                  {"config",
                   {{"out", o.out}, {"clips", o.clips}, {"frames", o.frames}, {"size", o.size},
                    {"seed", o.seed}, {"motion", o.motion}, {"force", o.force}}}});

  const fs::path dir(o.out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw IoError("output path exists and is not a directory: " + o.out);
    if (!fs::is_empty(dir)) {
      if (!o.force) throw ConfigError("output directory " + o.out + " is not empty (use --force)");
      fs::remove_all(dir);
    }
  }
  const std::string hash = synth_dataset(spec, dir);
  log_event(log, {{"event", "dataset"}, {"out", o.out}, {"hash", hash}});
  out << hash << "\n";
  return 0;
}

AblationConfig parse_ablation(const std::vector<std::string>& flags, const std::string& scope) {
  AblationConfig a;
  a.hidden_scope = parse_hidden_scope(scope);
  for (const auto& f : flags) {
    if (f == "no_gan") {
      a.use_gan = false;
    } else if (f == "no_hidden") {
      a.use_hidden = false;
    } else if (f == "no_motion_cond") {
      a.use_motion_condition = false;
    } else if (f == "no_spatial_cond") {
      a.use_spatial_condition = false;
    } else {
      throw ConfigError("unknown ablation '" + f +
                        "' (expected no_gan, no_hidden, no_motion_cond or no_spatial_cond)");
    }
  }
  a.validate();
  return a;
}

json preset_json(const QualityPreset& p) {
  return {{"name", p.name},     {"rate_target", p.rate_target},   {"lambda", p.lambda},
          {"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"lambda_prime", p.lambda_prime},
          {"beta", p.beta}};
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& log) {
  const TrainPhase phase = parse_train_phase(o.phase);
  const AblationConfig ablation = parse_ablation(o.ablate, o.hidden_scope);
  const PresetId preset_id = preset_by_name(o.preset).id;
  if (phase == TrainPhase::kAdversarial && !ablation.use_gan) {
    throw ConfigError("--ablate no_gan cannot be combined with --phase gan");
  }
  if (o.ckpt.empty()) throw ConfigError("--ckpt output directory is required");

  const torch::Tensor data = load_dataset(o.data);
  const int64_t height = data.size(3);
  const int64_t width = data.size(4);

  std::optional<Model> model;
  bool resume_same_phase = false;
  if (!o.resume.empty()) {
    CheckpointInfo info;
    model.emplace(load_checkpoint(o.resume, &info));
    resume_same_phase = info.phase == to_string(phase);
    if (!resume_same_phase && !(phase != TrainPhase::kWarmup && info.phase == "warmup")) {
      throw ConfigError("cannot start a " + to_string(phase) + " run from a " + info.phase +
                        " checkpoint");
    }
    auto& cfg = model->config;
    if (cfg.width != width || cfg.height != height) {
      throw ConfigError("checkpoint frame size differs from the dataset");
    }
    if (cfg.preset != preset_id) {
      throw ConfigError(std::string("checkpoint preset is ") + plvc::preset(cfg.preset).name +
                        ", requested " + o.preset);
    }
    if (cfg.backbone != backbone_for(ablation)) {
      throw ConfigError("incompatible ablation/checkpoint: ablation " + ablation.name() +
                        " needs the " + to_string(backbone_for(ablation)) +
                        " backbone, checkpoint has " + to_string(cfg.backbone));
    }
    if (!(cfg.ablation == ablation)) {
      if (resume_same_phase) {
        throw ConfigError("incompatible ablation/checkpoint: checkpoint was trained with " +
                          cfg.ablation.name());
      }
      // Warm-up never touches the discriminator, so it is rebuilt for the
      // requested conditions.
      cfg.ablation = ablation;
      model->discriminator = Discriminator(ablation, 2 * cfg.generator.latent_channels,
                                           cfg.discriminator_hidden, cfg.discriminator_width);
    }
  } else {
    if (phase != TrainPhase::kWarmup) {
      throw ConfigError("--phase " + o.phase + " requires --resume with a warm-up checkpoint");
    }
    ModelConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.generator.channels = o.channels;
    cfg.generator.latent_channels = o.latent;
    cfg.preset = preset_id;
    cfg.ablation = ablation;
    cfg.backbone = backbone_for(ablation);
    cfg.intra_mode = parse_intra_mode(o.intra);
    cfg.validate();
    model.emplace(cfg);
  }

  TrainConfig tc;
  tc.phase = phase;
  tc.preset = preset_id;
  tc.steps = o.steps;
  tc.batch = o.batch;
  tc.rollout = o.rollout;
  tc.lr_warmup = o.lr;
  tc.lr_generator = o.lr_g;
  tc.lr_discriminator = o.lr_d;
  tc.flow_pretrain_steps = o.flow_pretrain;
  tc.seed = o.seed;
  tc.rate_scale = o.rate_scale;
  tc.ablation = ablation;
  tc.out_dir = o.ckpt;
  tc.checkpoint_every = o.checkpoint_every;
  tc.log_every = o.log_every;
  tc.validate(data.size(1));

  log_event(log, {{"event", "resolved_config"},
                  {"command", "train"},
                  {"config",
                   {{"data", o.data}, {"preset", o.preset}, {"phase", o.phase},
                    {"steps", o.steps}, {"ckpt", o.ckpt}, {"resume", o.resume},
                    {"ablate", o.ablate}, {"hidden-scope", o.hidden_scope},
                    {"rate-scale", o.rate_scale}, {"seed", o.seed}, {"batch", o.batch},
                    {"rollout", o.rollout}, {"lr", o.lr}, {"lr-g", o.lr_g}, {"lr-d", o.lr_d},
                    {"flow-pretrain", o.flow_pretrain},
                    {"checkpoint-every", o.checkpoint_every}, {"log-every", o.log_every},
                    {"channels", o.channels}, {"latent", o.latent}, {"intra", o.intra}}},
                  {"preset", preset_json(plvc::preset(preset_id))},
                  {"train", tc.to_json()},
                  {"model", model->config.to_json()}});

  fs::create_directories(tc.out_dir);
  Trainer trainer(*model, tc);
  if (resume_same_phase) trainer.resume(o.resume);
  const fs::path final_ckpt = trainer.run(data);
  const auto summary = trainer.report().summary();
  log_event(log, {{"event", "train_done"}, {"checkpoint", final_ckpt.string()},
                  {"summary", summary}});
  out << final_ckpt.string() << "\n";
  return 0;
}

int cmd_encode(const EncodeOptions& o, std::ostream& out, std::ostream& log) {
  log_event(log, {{"event", "resolved_config"},
                  {"command", "encode"},
                  {"config",
                   {{"ckpt", o.ckpt}, {"input", o.input}, {"out", o.out}, {"gop", o.gop},
                    {"mode", o.mode}, {"recon", o.recon}}}});
  const GopMode mode = parse_gop_mode(o.mode);
  Model model = load_checkpoint(o.ckpt);
  const VideoClip clip = load_clip(o.input);
  const CodingPlan plan = plan_gop(static_cast<int64_t>(clip.size()), o.gop, mode);
  const EncodeResult result = encode_video(model, clip, plan);
  write_bitstream(o.out, result.bitstream);
  if (!o.recon.empty()) {
    std::vector<Frame> frames;
    for (const auto& t : result.reconstructions) frames.emplace_back(t);
    save_clip(VideoClip(std::move(frames)), o.recon);
  }
  const double bpp = result.bitstream.bpp();
  log_event(log, {{"event", "encoded"},
                  {"out", o.out},
                  {"bytes", result.bitstream.total_bytes()},
                  {"bpp", bpp},
                  {"estimated_bits", result.estimated_bits()}});
  out << json{{"bpp", bpp}, {"bytes", result.bitstream.total_bytes()}}.dump() << "\n";
  return 0;
}

int cmd_decode(const DecodeOptions& o, std::ostream& out, std::ostream& log) {
  log_event(log, {{"event", "resolved_config"},
                  {"command", "decode"},
                  {"config", {{"ckpt", o.ckpt}, {"input", o.input}, {"out", o.out}}}});
  Model model = load_checkpoint(o.ckpt);
  const Bitstream bits = read_bitstream(o.input);
  const auto recon = decode_video(model, bits);
  std::vector<Frame> frames;
  for (const auto& t : recon) frames.emplace_back(t);
  save_clip(VideoClip(std::move(frames)), o.out);
  log_event(log, {{"event", "decoded"}, {"out", o.out}, {"frames", recon.size()}});
  out << json{{"frames", recon.size()}}.dump() << "\n";
  return 0;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& log) {
  log_event(log, {{"event", "resolved_config"},
                  {"command", "eval"},
                  {"config",
                   {{"raw", o.raw}, {"rec", o.rec}, {"bits", o.bits}, {"report", o.report},
                    {"embedder-seed", o.embedder_seed}, {"rate-scale", o.rate_scale}}}});
  EvalInputs in;
  in.raw_dir = o.raw;
  in.rec_dir = o.rec;
  in.bitstreams = expand_glob(o.bits);
  in.embedder_seed = o.embedder_seed;
  in.rate_scale = o.rate_scale;
  const MetricReport report = rate_quality_report(in);
  write_report(report, o.report);
  const auto j = report.to_json();
  log_event(log, {{"event", "report"}, {"path", o.report}, {"aggregate", j.at("aggregate")}});
  out << j.at("aggregate").dump() << "\n";
  return 0;
}

int cmd_profile(const ProfileOptions& o, std::ostream& out, std::ostream& log) {
  log_event(log, {{"event", "resolved_config"},
                  {"command", "profile"},
                  {"config", {{"video", o.video}, {"row", o.row}, {"out", o.out}}}});
  const VideoClip clip = load_clip(o.video);
  const torch::Tensor profile = temporal_profile(clip, o.row);
  write_png(o.out, frame_to_rgb8(Frame(profile)), profile.size(1), profile.size(2));
  out << json{{"out", o.out}, {"height", profile.size(1)}, {"width", profile.size(2)}}.dump()
      << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"plvc: recurrent learned video codec"};
  app.name("plvc");
  app.require_subcommand(1);
  app.allow_extras(false);

  std::string unused_config;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", unused_config, "JSON file with flag values (flags win)");
  };

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Render a synthetic training dataset");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--clips", synth.clips, "Number of clips");
  s->add_option("--frames", synth.frames, "Frames per clip");
  s->add_option("--size", synth.size, "Frame width and height");
  s->add_option("--seed", synth.seed, "Dataset seed");
  s->add_option("--motion", synth.motion, "translate|rotate|mixed");
  s->add_flag("--force", synth.force, "Replace a non-empty output directory");
  add_config(s);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Run a training phase");
  t->add_option("--data", train.data, "Dataset directory")->required();
  t->add_option("--preset", train.preset, "low|medium|high");
  t->add_option("--phase", train.phase, "warmup|gan|rate_targeted");
  t->add_option("--steps", train.steps, "Training steps");
  t->add_option("--ckpt", train.ckpt, "Output directory for checkpoints and reports")->required();
  t->add_option("--resume", train.resume, "Checkpoint to resume or to start from");
  t->add_option("--ablate", train.ablate, "no_gan|no_hidden|no_motion_cond|no_spatial_cond");
  t->add_option("--hidden-scope", train.hidden_scope, "d_only|g_and_d");
  t->add_option("--rate-scale", train.rate_scale, "Multiplier on the preset rate target");
  t->add_option("--seed", train.seed, "Training seed");
  t->add_option("--batch", train.batch, "Clips per step");
  t->add_option("--rollout", train.rollout, "P-frames per rollout");
  t->add_option("--lr", train.lr, "Warm-up learning rate");
  t->add_option("--lr-g", train.lr_g, "Adversarial-phase generator learning rate");
  t->add_option("--lr-d", train.lr_d, "Discriminator learning rate");
  t->add_option("--flow-pretrain", train.flow_pretrain, "Photometric flow steps before warm-up");
  t->add_option("--checkpoint-every", train.checkpoint_every, "Intermediate checkpoint period");
  t->add_option("--log-every", train.log_every, "Step log period (0: silent)");
  t->add_option("--channels", train.channels, "Auto-encoder width");
  t->add_option("--latent", train.latent, "Latent channels");
  t->add_option("--intra", train.intra, "intra_ae|lossless");
  add_config(t);

  EncodeOptions encode;
  auto* e = app.add_subcommand("encode", "Encode a frame directory into a bitstream");
  e->add_option("--ckpt", encode.ckpt, "Checkpoint")->required();
  e->add_option("--input", encode.input, "Directory of im1.png ...")->required();
  e->add_option("--out", encode.out, "Bitstream file")->required();
  e->add_option("--gop", encode.gop, "GOP size");
  e->add_option("--mode", encode.mode, "ippp|bi");
  e->add_option("--recon", encode.recon, "Also write encoder-side reconstructions here");
  add_config(e);

  DecodeOptions decode;
  auto* d = app.add_subcommand("decode", "Decode a bitstream into frames");
  d->add_option("--ckpt", decode.ckpt, "Checkpoint")->required();
  d->add_option("--input", decode.input, "Bitstream file")->required();
  d->add_option("--out", decode.out, "Output directory")->required();
  add_config(d);

  EvalOptions eval;
  auto* v = app.add_subcommand("eval", "Rate-quality report over sequences");
  v->add_option("--raw", eval.raw, "Raw frames")->required();
  v->add_option("--rec", eval.rec, "Reconstructed frames")->required();
  v->add_option("--bits", eval.bits, "Bitstream glob")->required();
  v->add_option("--report", eval.report, "Report JSON path")->required();
  v->add_option("--embedder-seed", eval.embedder_seed, "Feature embedder seed");
  v->add_option("--rate-scale", eval.rate_scale, "Rate scale recorded in the report");
  add_config(v);

  ProfileOptions profile;
  auto* p = app.add_subcommand("profile", "Render a temporal profile image");
  p->add_option("--video", profile.video, "Frame directory")->required();
  p->add_option("--row", profile.row, "Pixel row")->required();
  p->add_option("--out", profile.out, "Output PNG")->required();
  add_config(p);

  try {
    std::vector<std::string> merged = args;
    if (!args.empty()) {
      if (CLI::App* sub = app.get_subcommand_no_throw(args.front())) {
        merged = apply_config_file(args, *sub);
      }
    }
    std::reverse(merged.begin(), merged.end());
    try {
      app.parse(merged);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& err) {
      throw ConfigError(err.what());
    }

    if (s->parsed()) return cmd_synth(synth, out, log);
    if (t->parsed()) return cmd_train(train, out, log);
    if (e->parsed()) return cmd_encode(encode, out, log);
    if (d->parsed()) return cmd_decode(decode, out, log);
    if (v->parsed()) return cmd_eval(eval, out, log);
    if (p->parsed()) return cmd_profile(profile, out, log);
    throw ConfigError("no subcommand given");
  } catch (const Error& err) {
    static const char* const kNames[] = {"", "", "config", "io", "model", "bitstream"};
    const int code = static_cast<int>(err.kind());
    log_event(log, {{"level", "error"}, {"kind", kNames[code]}, {"message", err.what()}});
    return code;
  } catch (const fs::filesystem_error& err) {
    log_event(log, {{"level", "error"}, {"kind", "io"}, {"message", err.what()}});
    return static_cast<int>(ErrorKind::kIo);
  } catch (const c10::Error& err) {
    log_event(log, {{"level", "error"}, {"kind", "model"}, {"message", err.what_without_backtrace()}});
    return static_cast<int>(ErrorKind::kModel);
  } catch (const std::exception& err) {
    log_event(log, {{"level", "error"}, {"kind", "internal"}, {"message", err.what()}});
    return 1;
  }
}

}  // namespace plvc::cli
