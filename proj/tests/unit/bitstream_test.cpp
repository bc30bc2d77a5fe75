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

#include "plvc/bitstream.hpp"
#include "plvc/error.hpp"
#include "test_support.hpp"

namespace plvc {
namespace {

using testing::bit_equal;
using testing::small_config;
using testing::synthetic_clip;

TEST(BitstreamHeader, ByteLayout) {
  BitstreamHeader h;
  h.flags = kFlagNonRecurrent;
  h.width = 0x0140;
  h.height = 0x00F0;
  h.frame_count = 0x01020304;
  h.gop_size = 9;
  h.gop_mode = 1;
  h.preset_id = 2;
  h.intra_mode = 1;
  h.backbone_id = 1;
  const auto b = h.serialize();
  const std::array<uint8_t, 20> expected{'P', 'L', 'V', 'C', 1, 1, 0x40, 0x01, 0xF0, 0x00,
                                         0x04, 0x03, 0x02, 0x01, 9, 1, 2, 1, 1, kPrecisionFp32};
  EXPECT_EQ(b, expected);
  EXPECT_EQ(BitstreamHeader::parse(b), h);
}

TEST(BitstreamHeader, RejectsBadMagicAndVersion) {
  auto b = BitstreamHeader{}.serialize();
  b[0] = 'X';
  EXPECT_THROW(BitstreamHeader::parse(b), BitstreamError);
  b = BitstreamHeader{}.serialize();
  b[4] = 9;
  EXPECT_THROW(BitstreamHeader::parse(b), BitstreamError);
  EXPECT_THROW(BitstreamHeader::parse(std::span<const uint8_t>(b.data(), 10)), BitstreamError);
}

class CodecTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(0);
    model_ = std::make_unique<Model>(small_config());
    model_->eval();
  }
  std::unique_ptr<Model> model_;
};

TEST_F(CodecTest, ChunkLayoutAndBpp) {
  const auto clip = synthetic_clip(9, 64, 3);
  const auto r = encode_video(*model_, clip, plan_gop(9, 9, GopMode::kIppp));
  EXPECT_EQ(r.bitstream.chunks.size(), 1u + 2u * 8u);
  EXPECT_EQ(r.bitstream.header.frame_count, 9u);
  EXPECT_EQ(r.bitstream.header.width, 64);
  EXPECT_EQ(r.estimated_chunk_bits.size(), r.bitstream.chunks.size());
  const auto bytes = r.bitstream.serialize();
  EXPECT_EQ(bytes.size(), r.bitstream.total_bytes());
  EXPECT_EQ(bytes.size(), kHeaderBytes + 4 * 17 + r.bitstream.payload_bytes());
  EXPECT_DOUBLE_EQ(r.bitstream.bpp(), 8.0 * bytes.size() / (64.0 * 64.0 * 9.0));
}

TEST_F(CodecTest, EncodeIsDeterministic) {
  const auto clip = synthetic_clip(5, 64, 4);
  const auto plan = plan_gop(5, 9, GopMode::kIppp);
  const auto a = encode_video(*model_, clip, plan).bitstream.serialize();
  const auto b = encode_video(*model_, clip, plan).bitstream.serialize();
  EXPECT_EQ(a, b);
}

TEST_F(CodecTest, DecodeMatchesEncoderBothModes) {
  const auto clip = synthetic_clip(9, 64, 5);
  for (auto mode : {GopMode::kIppp, GopMode::kBiIppp}) {
    const auto r = encode_video(*model_, clip, plan_gop(9, 4, mode));
    const auto parsed = Bitstream::parse(r.bitstream.serialize());
    const auto dec = decode_video(*model_, parsed);
    ASSERT_EQ(dec.size(), 9u);
    for (size_t i = 0; i < 9; ++i) EXPECT_TRUE(bit_equal(dec[i], r.reconstructions[i])) << i;
  }
}

TEST_F(CodecTest, TruncatedChunkIsCorrupt) {
  const auto clip = synthetic_clip(3, 64, 6);
  auto bytes = encode_video(*model_, clip, plan_gop(3, 9, GopMode::kIppp)).bitstream.serialize();
  bytes.resize(bytes.size() - 3);
  try {
    Bitstream::parse(bytes);
    FAIL() << "expected BitstreamError";
  } catch (const BitstreamError& e) {
    EXPECT_NE(std::string(e.what()).find("chunk"), std::string::npos);
  }
}

TEST_F(CodecTest, EmptiedPayloadIsRejected) {
  const auto clip = synthetic_clip(3, 64, 7);
  auto bits = encode_video(*model_, clip, plan_gop(3, 9, GopMode::kIppp)).bitstream;
  bits.chunks[1].clear();
  EXPECT_THROW(decode_video(*model_, bits), BitstreamError);
}

TEST_F(CodecTest, HeaderMismatchIsConfigError) {
  const auto clip = synthetic_clip(2, 64, 8);
  auto bits = encode_video(*model_, clip, plan_gop(2, 9, GopMode::kIppp)).bitstream;
  auto wrong_size = bits;
  wrong_size.header.width = 128;
  EXPECT_THROW(decode_video(*model_, wrong_size), ConfigError);
  auto wrong_preset = bits;
  wrong_preset.header.preset_id = 2;
  EXPECT_THROW(decode_video(*model_, wrong_preset), ConfigError);
  auto wrong_backbone = bits;
  wrong_backbone.header.backbone_id = 1;
  EXPECT_THROW(decode_video(*model_, wrong_backbone), ConfigError);
}

TEST(Codec, NonRecurrentAndLosslessRoundtrip) {
  auto cfg = small_config();
  cfg.backbone = BackboneId::kNonRecurrent;
  cfg.intra_mode = IntraMode::kLossless;
  torch::manual_seed(1);
  Model model(cfg);
  model.eval();
  const auto clip = synthetic_clip(4, 64, 9);
  const auto r = encode_video(model, clip, plan_gop(4, 9, GopMode::kIppp));
  EXPECT_EQ(r.bitstream.header.flags & kFlagNonRecurrent, kFlagNonRecurrent);
  EXPECT_EQ(r.bitstream.header.intra_mode, 1);
  // Lossless I-frame: 24 bits per pixel of payload, exact 8-bit pixels.
  EXPECT_EQ(r.bitstream.chunks[0].size(), 64u * 64u * 3u);
  EXPECT_TRUE(torch::allclose(r.reconstructions[0], quantize_8bit(clip[0].pixels()), 0, 0));
  const auto dec = decode_video(model, Bitstream::parse(r.bitstream.serialize()));
  for (size_t i = 0; i < 4; ++i) EXPECT_TRUE(bit_equal(dec[i], r.reconstructions[i]));
}

TEST(Codec, FileRoundtrip) {
  testing::TempDir dir;
  Bitstream b;
  b.header.width = 64;
  b.header.height = 64;
  b.header.frame_count = 1;
  b.chunks = {{1, 2, 3}, {}};
  write_bitstream(dir / "x.plvc", b);
  const auto back = read_bitstream(dir / "x.plvc");
  EXPECT_EQ(back.header, b.header);
  EXPECT_EQ(back.chunks, b.chunks);
  EXPECT_THROW(read_bitstream(dir / "missing.plvc"), IoError);
}

}  // namespace
}  // namespace plvc
