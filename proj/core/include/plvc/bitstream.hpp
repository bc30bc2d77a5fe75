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

#ifndef PLVC_BITSTREAM_HPP_
#define PLVC_BITSTREAM_HPP_

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "plvc/coding_plan.hpp"
#include "plvc/frame.hpp"
#include "plvc/model.hpp"

namespace plvc {

inline constexpr std::array<uint8_t, 4> kBitstreamMagic{'P', 'L', 'V', 'C'};
inline constexpr uint8_t kBitstreamVersion = 1;
inline constexpr size_t kHeaderBytes = 20;
// flags bit 0: generator recurrence disabled.
inline constexpr uint8_t kFlagNonRecurrent = 0x01;

/// Fixed 20-byte little-endian header:
///   0 magic "PLVC" | 4 version u8 | 5 flags u8 | 6 width u16 | 8 height u16
///   10 frame_count u32 | 14 gop_size u8 | 15 gop_mode u8 | 16 preset_id u8
///   17 intra_mode u8 | 18 backbone_id u8 | 19 precision_tag u8
struct BitstreamHeader {
  uint8_t version = kBitstreamVersion;
  uint8_t flags = 0;
  uint16_t width = 0;
  uint16_t height = 0;
  uint32_t frame_count = 0;
  uint8_t gop_size = 9;
  uint8_t gop_mode = 0;
  uint8_t preset_id = 1;
  uint8_t intra_mode = 0;
  uint8_t backbone_id = 0;
  uint8_t precision_tag = kPrecisionFp32;

  std::array<uint8_t, kHeaderBytes> serialize() const;
  static BitstreamHeader parse(std::span<const uint8_t> bytes);
  bool operator==(const BitstreamHeader&) const = default;
};

// Header followed by (u32 length, payload) chunks in plan decode order: one
// chunk per I-frame, two per P-frame (motion, residual).
struct Bitstream {
  BitstreamHeader header;
  std::vector<std::vector<uint8_t>> chunks;

  std::vector<uint8_t> serialize() const;
  static Bitstream parse(std::span<const uint8_t> bytes);

  size_t payload_bytes() const;
  size_t total_bytes() const;
  // Whole-file bits over width * height * frame_count.
  double bpp() const;
};

void write_bitstream(const std::filesystem::path& path, const Bitstream& bits);
Bitstream read_bitstream(const std::filesystem::path& path);

struct EncodeResult {
  Bitstream bitstream;
  // Encoder-side reconstructions in display order, each [3,H,W].
  std::vector<torch::Tensor> reconstructions;
  // Entropy-model estimate per chunk, in chunk order.
  std::vector<double> estimated_chunk_bits;
  double estimated_bits() const;
  double payload_bits() const { return 8.0 * static_cast<double>(bitstream.payload_bytes()); }
};

// Runs the model in test mode along `plan` and range-codes every latent.
EncodeResult encode_video(Model& model, const VideoClip& clip, const CodingPlan& plan);

// Rebuilds the reconstructions from the bitstream alone. Returned tensors
// are [3,H,W] in display order and equal the encoder-side ones bit for bit.
std::vector<torch::Tensor> decode_video(Model& model, const Bitstream& bits);

// Throws ConfigError when the header disagrees with the model config.
void check_compatible(const BitstreamHeader& header, const ModelConfig& config);

}  // namespace plvc

#endif  // PLVC_BITSTREAM_HPP_
