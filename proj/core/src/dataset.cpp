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

#include "plvc/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plvc/error.hpp"

namespace plvc {
namespace fs = std::filesystem;

std::string to_string(MotionProfile p) {
  switch (p) {
    case MotionProfile::kTranslate: return "translate";
    case MotionProfile::kRotate: return "rotate";
    case MotionProfile::kMixed: return "mixed";
  }
  return "mixed";
}

MotionProfile parse_motion_profile(const std::string& s) {
  if (s == "translate") return MotionProfile::kTranslate;
  if (s == "rotate") return MotionProfile::kRotate;
  if (s == "mixed") return MotionProfile::kMixed;
  throw ConfigError("unknown motion profile: " + s);
}

void DatasetSpec::validate() const {
  if (clip_count < 1) throw ConfigError("clip_count must be >= 1");
  if (frames_per_clip < 2) throw ConfigError("frames_per_clip must be >= 2");
  if (frame_size < 16) throw ConfigError("frame_size must be >= 16");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Grating {
  double freq, cos_a, sin_a, phase;
  std::array<double, 3> amp;
};

struct Shape {
  bool ellipse;
  double half_w, half_h;
  double cx, cy, angle0;
  std::array<double, 3> color;
  double stripe_freq, stripe_cos, stripe_sin, stripe_phase;
};

class Rng {
 public:
  Rng(uint64_t seed, int64_t stream) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(stream), 0x504c5643u};
    engine_.seed(seq);
  }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(engine_() % static_cast<uint64_t>(hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

// Value noise on a coarse lattice, bilinearly interpolated.
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int64_t size, int64_t cell) : cell_(cell), n_(size / cell + 2) {
    values_.resize(static_cast<size_t>(n_ * n_ * 3));
    for (auto& v : values_) v = rng.uniform(-1.0, 1.0);
  }
  double at(double x, double y, int c) const {
    const double gx = x / cell_, gy = y / cell_;
    const int64_t x0 = static_cast<int64_t>(std::floor(gx)), y0 = static_cast<int64_t>(std::floor(gy));
    const double fx = gx - x0, fy = gy - y0;
    auto v = [&](int64_t xi, int64_t yi) {
      xi = std::clamp<int64_t>(xi, 0, n_ - 1);
      yi = std::clamp<int64_t>(yi, 0, n_ - 1);
      return values_[static_cast<size_t>((yi * n_ + xi) * 3 + c)];
    };
    return (1 - fy) * ((1 - fx) * v(x0, y0) + fx * v(x0 + 1, y0)) +
           fy * ((1 - fx) * v(x0, y0 + 1) + fx * v(x0 + 1, y0 + 1));
  }

 private:
  int64_t cell_, n_;
  std::vector<double> values_;
};

bool inside(const Shape& s, double u, double v) {
  if (s.ellipse) {
    const double a = u / s.half_w, b = v / s.half_h;
    return a * a + b * b <= 1.0;
  }
  return std::abs(u) <= s.half_w && std::abs(v) <= s.half_h;
}

}  // namespace

RenderedClip render_clip(const DatasetSpec& spec, int64_t clip_index) {
  spec.validate();
  Rng rng(spec.seed, clip_index);
  const int64_t size = spec.frame_size;
  const int64_t frames = spec.frames_per_clip;

  std::array<double, 3> base;
  for (auto& b : base) b = rng.uniform(0.3, 0.7);
  std::vector<Grating> gratings(3);
  for (auto& g : gratings) {
    g.freq = rng.uniform(0.03, 0.25);
    const double a = rng.uniform(0.0, std::numbers::pi);
    g.cos_a = std::cos(a);
    g.sin_a = std::sin(a);
    g.phase = rng.uniform(0.0, kTwoPi);
    for (auto& amp : g.amp) amp = rng.uniform(0.03, 0.12);
  }
  ValueNoise noise(rng, size, 4);
  const double noise_amp = rng.uniform(0.04, 0.1);

  RenderedClip out;
  const bool translate = spec.motion_profile != MotionProfile::kRotate;
  const bool rotate = spec.motion_profile != MotionProfile::kTranslate;
  if (translate) {
    do {
      out.velocity = {rng.integer(-kMaxSpeed, kMaxSpeed), rng.integer(-kMaxSpeed, kMaxSpeed)};
    } while (out.velocity[0] * out.velocity[0] + out.velocity[1] * out.velocity[1] >
             kMaxSpeed * kMaxSpeed);
  }

  const int count = rng.integer(2, 3);
  std::vector<Shape> shapes(static_cast<size_t>(count));
  double max_radius = 1.0;
  for (auto& s : shapes) {
    s.ellipse = rng.integer(0, 1) == 1;
    s.half_w = rng.uniform(5.0, 12.0);
    s.half_h = rng.uniform(5.0, 12.0);
    const double margin = 12.0;
    s.cx = rng.uniform(margin, static_cast<double>(size) - margin);
    s.cy = rng.uniform(margin, static_cast<double>(size) - margin);
    s.angle0 = rotate ? rng.uniform(0.0, kTwoPi) : 0.0;
    for (auto& c : s.color) c = rng.uniform(0.05, 0.95);
    s.stripe_freq = rng.uniform(0.1, 0.35);
    const double a = rng.uniform(0.0, std::numbers::pi);
    s.stripe_cos = std::cos(a);
    s.stripe_sin = std::sin(a);
    s.stripe_phase = rng.uniform(0.0, kTwoPi);
    max_radius = std::max(max_radius, std::hypot(s.half_w, s.half_h));
  }
  if (rotate) {
    // Keep the fastest-moving point of every object within kMaxSpeed px/frame.
    const double limit = kMaxSpeed / max_radius;
    out.angular_velocity = rng.uniform(0.3 * limit, limit) * (rng.integer(0, 1) ? 1.0 : -1.0);
  }

  // Static textured background, [H, W, 3].
  std::vector<double> background(static_cast<size_t>(size * size * 3));
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = base[c] + noise_amp * noise.at(static_cast<double>(x), static_cast<double>(y), c);
        for (const auto& g : gratings) {
          v += g.amp[c] * std::sin(kTwoPi * g.freq * (x * g.cos_a + y * g.sin_a) + g.phase);
        }
        background[static_cast<size_t>((y * size + x) * 3 + c)] = v;
      }
    }
  }

  static constexpr std::array<double, 2> kSub = {-0.25, 0.25};
  out.masks.assign(shapes.size(), {});
  for (int64_t t = 0; t < frames; ++t) {
    std::vector<double> img = background;
    for (size_t k = 0; k < shapes.size(); ++k) {
      const auto& s = shapes[k];
      const double cx = s.cx + static_cast<double>(t * out.velocity[0]);
      const double cy = s.cy + static_cast<double>(t * out.velocity[1]);
      const double angle = s.angle0 + static_cast<double>(t) * out.angular_velocity;
      const double ca = std::cos(angle), sa = std::sin(angle);
      auto mask = torch::zeros({size, size}, torch::kFloat32);
      auto m = mask.accessor<float, 2>();
      for (int64_t y = 0; y < size; ++y) {
        for (int64_t x = 0; x < size; ++x) {
          double cover = 0.0;
          std::array<double, 3> col{0.0, 0.0, 0.0};
          for (double oy : kSub) {
            for (double ox : kSub) {
              const double dx = static_cast<double>(x) + ox - cx;
              const double dy = static_cast<double>(y) + oy - cy;
              const double u = ca * dx + sa * dy;
              const double v = -sa * dx + ca * dy;
              if (!inside(s, u, v)) continue;
              cover += 0.25;
              const double stripe = 0.7 + 0.3 * std::sin(kTwoPi * s.stripe_freq *
                                                         (u * s.stripe_cos + v * s.stripe_sin) +
                                                     s.stripe_phase);
              for (int c = 0; c < 3; ++c) col[c] += 0.25 * s.color[c] * stripe;
            }
          }
          if (cover == 0.0) continue;
          m[y][x] = static_cast<float>(cover);
          for (int c = 0; c < 3; ++c) {
            auto& px = img[static_cast<size_t>((y * size + x) * 3 + c)];
            px = px * (1.0 - cover) + col[c];
          }
        }
      }
      out.masks[k].push_back(mask);
    }
    auto frame = torch::empty({size, size, 3}, torch::kFloat32);
    float* dst = frame.data_ptr<float>();
    for (size_t i = 0; i < img.size(); ++i) dst[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
    out.clip.push_back(Frame(frame.permute({2, 0, 1}).contiguous()));
  }
  return out;
}

std::string synth_dataset(const DatasetSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (int64_t i = 0; i < spec.clip_count; ++i) {
    std::ostringstream name;
    name << "clip_" << std::setw(4) << std::setfill('0') << i;
    const auto dir = out_dir / name.str();
    const auto rendered = render_clip(spec, i);
    save_clip(rendered.clip, dir);
    nlohmann::json log;
    log["velocity"] = rendered.velocity;
    log["angular_velocity"] = rendered.angular_velocity;
    log["motion_profile"] = to_string(spec.motion_profile);
    std::ofstream f(dir / "motion.json", std::ios::binary);
    if (!f) throw IoError("cannot write motion log in " + dir.string());
    f << log.dump(2) << "\n";
  }
  return hash_directory(out_dir);
}

std::string hash_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf;
  for (const auto& rel : files) {
    const std::string name = rel.generic_string();
    EVP_DigestUpdate(ctx.get(), name.data(), name.size() + 1);
    std::ifstream in(dir / rel, std::ios::binary);
    buf.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    const uint64_t len = buf.size();
    EVP_DigestUpdate(ctx.get(), &len, sizeof(len));
    EVP_DigestUpdate(ctx.get(), buf.data(), buf.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &digest_len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < digest_len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

torch::Tensor load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("missing dataset directory: " + dir.string());
  std::vector<fs::path> clips;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) clips.push_back(e.path());
  }
  if (clips.empty()) throw IoError("dataset has no clip directories: " + dir.string());
  std::sort(clips.begin(), clips.end());
  std::vector<torch::Tensor> tensors;
  tensors.reserve(clips.size());
  for (const auto& c : clips) {
    auto t = load_clip(c).to_tensor();
    if (!tensors.empty() && t.sizes() != tensors.front().sizes()) {
      throw IoError("clip " + c.string() + " differs in length or size from the first clip");
    }
    tensors.push_back(std::move(t));
  }
  return torch::stack(tensors);
}

}  // namespace plvc
