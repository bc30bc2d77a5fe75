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

#include "plvc/frame.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>

#include "plvc/error.hpp"

namespace plvc {
namespace fs = std::filesystem;

Frame::Frame(torch::Tensor pixels) {
  if (pixels.dim() == 4 && pixels.size(0) == 1) pixels = pixels.squeeze(0);
  if (pixels.dim() != 3 || pixels.size(0) != 3) {
    throw ModelError("frame must be a [3,H,W] tensor, got " +
                     std::to_string(pixels.dim()) + "-d");
  }
  if (pixels.size(1) <= 0 || pixels.size(2) <= 0) throw ModelError("frame has zero size");
  pixels = pixels.to(torch::kFloat32).contiguous();
  if (!torch::isfinite(pixels).all().item<bool>()) {
    throw ModelError("frame contains non-finite pixels");
  }
  if (pixels.min().item<float>() < 0.0f || pixels.max().item<float>() > 1.0f) {
    throw ModelError("frame pixels outside [0,1]");
  }
  pixels_ = std::move(pixels);
}

void Frame::require_divisible(int64_t factor) const {
  if (height() % factor != 0 || width() % factor != 0) {
    throw ConfigError("frame size " + std::to_string(width()) + "x" +
                      std::to_string(height()) + " is not divisible by " +
                      std::to_string(factor));
  }
}

VideoClip::VideoClip(std::vector<Frame> frames) {
  for (auto& f : frames) push_back(std::move(f));
}

VideoClip VideoClip::from_tensor(const torch::Tensor& frames) {
  if (frames.dim() != 4) throw ModelError("clip tensor must be [T,3,H,W]");
  VideoClip clip;
  for (int64_t t = 0; t < frames.size(0); ++t) clip.push_back(Frame(frames[t]));
  return clip;
}

void VideoClip::push_back(Frame frame) {
  if (!frame.defined()) throw ModelError("cannot append an empty frame");
  if (!frames_.empty() &&
      (frame.height() != height() || frame.width() != width())) {
    throw ModelError("all frames of a clip must share dimensions");
  }
  frames_.push_back(std::move(frame));
}

int64_t VideoClip::height() const {
  if (frames_.empty()) throw ModelError("empty clip");
  return frames_.front().height();
}

int64_t VideoClip::width() const {
  if (frames_.empty()) throw ModelError("empty clip");
  return frames_.front().width();
}

torch::Tensor VideoClip::to_tensor() const {
  if (frames_.empty()) throw ModelError("empty clip");
  std::vector<torch::Tensor> ts;
  ts.reserve(frames_.size());
  for (const auto& f : frames_) ts.push_back(f.pixels());
  return torch::stack(ts);
}

uint8_t to_byte(float v) {
  const double scaled = std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0;
  // std::round rounds half away from zero.
  return static_cast<uint8_t>(std::round(scaled));
}

std::vector<uint8_t> frame_to_rgb8(const Frame& frame) {
  const auto hwc = frame.pixels().permute({1, 2, 0}).contiguous();
  const float* src = hwc.data_ptr<float>();
  std::vector<uint8_t> out(static_cast<size_t>(hwc.numel()));
  for (size_t i = 0; i < out.size(); ++i) out[i] = to_byte(src[i]);
  return out;
}

Frame frame_from_rgb8(const std::vector<uint8_t>& rgb, int64_t height, int64_t width) {
  if (static_cast<int64_t>(rgb.size()) != height * width * 3) {
    throw IoError("rgb buffer size does not match frame dimensions");
  }
  auto t = torch::empty({height, width, 3}, torch::kFloat32);
  float* dst = t.data_ptr<float>();
  for (size_t i = 0; i < rgb.size(); ++i) dst[i] = static_cast<float>(rgb[i]) / 255.0f;
  return Frame(t.permute({2, 0, 1}).contiguous());
}

void write_png(const fs::path& path, const std::vector<uint8_t>& rgb, int64_t height,
               int64_t width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(),
                               static_cast<png_int_32>(width * 3), nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + image.message);
  }
}

std::vector<uint8_t> read_png(const fs::path& path, int64_t* height, int64_t* width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode " + path.string() + ": " + image.message);
  }
  *height = image.height;
  *width = image.width;
  return buffer;
}

std::string format_frame_name(std::string_view pattern, int64_t index) {
  const auto pos = pattern.find("%d");
  if (pos == std::string_view::npos || pattern.find("%d", pos + 2) != std::string_view::npos) {
    throw ConfigError("frame pattern must contain exactly one %d: " + std::string(pattern));
  }
  return std::string(pattern.substr(0, pos)) + std::to_string(index) +
         std::string(pattern.substr(pos + 2));
}

namespace {

std::regex pattern_regex(std::string_view pattern) {
  const auto pos = pattern.find("%d");
  if (pos == std::string_view::npos) {
    throw ConfigError("frame pattern must contain %d: " + std::string(pattern));
  }
  auto escape = [](std::string_view s) {
    static const std::regex special{R"([.^$|()\[\]{}*+?\\])"};
    return std::regex_replace(std::string(s), special, R"(\$&)");
  };
  return std::regex("^" + escape(pattern.substr(0, pos)) + "([0-9]+)" +
                    escape(pattern.substr(pos + 2)) + "$");
}

}  // namespace

VideoClip load_clip(const fs::path& directory, std::string_view pattern) {
  if (!fs::is_directory(directory)) {
    throw IoError("missing clip directory: " + directory.string());
  }
  const auto re = pattern_regex(pattern);
  std::map<int64_t, fs::path> indexed;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, re)) indexed[std::stoll(m[1].str())] = entry.path();
  }
  if (indexed.empty()) {
    throw IoError("no frames matching " + std::string(pattern) + " in " + directory.string());
  }
  int64_t expected = 1;
  VideoClip clip;
  for (const auto& [index, path] : indexed) {
    if (index != expected) {
      throw IoError("non-contiguous frame indices in " + directory.string() + ": expected " +
                    std::to_string(expected) + ", found " + std::to_string(index));
    }
    ++expected;
    int64_t h = 0, w = 0;
    auto rgb = read_png(path, &h, &w);
    if (!clip.empty() && (h != clip.height() || w != clip.width())) {
      throw IoError("inconsistent frame dimensions at " + path.string());
    }
    clip.push_back(frame_from_rgb8(rgb, h, w));
  }
  return clip;
}

void save_clip(const VideoClip& clip, const fs::path& directory, std::string_view pattern) {
  if (clip.empty()) throw IoError("refusing to save an empty clip");
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  for (size_t t = 0; t < clip.size(); ++t) {
    const auto& f = clip[t];
    write_png(directory / format_frame_name(pattern, static_cast<int64_t>(t) + 1),
              frame_to_rgb8(f), f.height(), f.width());
  }
}

}  // namespace plvc
