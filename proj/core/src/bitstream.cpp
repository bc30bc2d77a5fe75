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

#include "plvc/bitstream.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include "plvc/error.hpp"
#include "plvc/range_coder.hpp"

namespace plvc {
namespace fs = std::filesystem;

namespace {

void put_u16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
}

void put_u32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

std::array<uint8_t, kHeaderBytes> BitstreamHeader::serialize() const {
  std::array<uint8_t, kHeaderBytes> b{};
  std::copy(kBitstreamMagic.begin(), kBitstreamMagic.end(), b.begin());
  b[4] = version;
  b[5] = flags;
  put_u16(&b[6], width);
  put_u16(&b[8], height);
  put_u32(&b[10], frame_count);
  b[14] = gop_size;
  b[15] = gop_mode;
  b[16] = preset_id;
  b[17] = intra_mode;
  b[18] = backbone_id;
  b[19] = precision_tag;
  return b;
}

BitstreamHeader BitstreamHeader::parse(std::span<const uint8_t> b) {
  if (b.size() < kHeaderBytes) throw BitstreamError("bitstream shorter than its header");
  if (!std::equal(kBitstreamMagic.begin(), kBitstreamMagic.end(), b.begin())) {
    throw BitstreamError("bad magic: not a PLVC bitstream");
  }
  BitstreamHeader h;
  h.version = b[4];
  if (h.version != kBitstreamVersion) {
    throw BitstreamError("unsupported bitstream version " + std::to_string(h.version));
  }
  h.flags = b[5];
  h.width = get_u16(&b[6]);
  h.height = get_u16(&b[8]);
  h.frame_count = get_u32(&b[10]);
  h.gop_size = b[14];
  h.gop_mode = b[15];
  h.preset_id = b[16];
  h.intra_mode = b[17];
  h.backbone_id = b[18];
  h.precision_tag = b[19];
  if (h.gop_mode > 1) throw BitstreamError("invalid gop mode " + std::to_string(h.gop_mode));
  if (h.gop_size < 2) throw BitstreamError("invalid gop size " + std::to_string(h.gop_size));
  if (h.frame_count == 0 || h.width == 0 || h.height == 0) {
    throw BitstreamError("header describes an empty video");
  }
  return h;
}

std::vector<uint8_t> Bitstream::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(total_bytes());
  const auto head = header.serialize();
  out.insert(out.end(), head.begin(), head.end());
  for (const auto& c : chunks) {
    uint8_t len[4];
    put_u32(len, static_cast<uint32_t>(c.size()));
    out.insert(out.end(), len, len + 4);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

Bitstream Bitstream::parse(std::span<const uint8_t> bytes) {
  Bitstream bs;
  bs.header = BitstreamHeader::parse(bytes);
  size_t pos = kHeaderBytes;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) {
      throw BitstreamError("corrupt chunk " + std::to_string(bs.chunks.size()) +
                           ": truncated length field");
    }
    const uint32_t len = get_u32(&bytes[pos]);
    pos += 4;
    if (bytes.size() - pos < len) {
      throw BitstreamError("corrupt chunk " + std::to_string(bs.chunks.size()) + ": declares " +
                           std::to_string(len) + " bytes, " + std::to_string(bytes.size() - pos) +
                           " remain");
    }
    bs.chunks.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                           bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return bs;
}

size_t Bitstream::payload_bytes() const {
  size_t n = 0;
  for (const auto& c : chunks) n += c.size();
  return n;
}

size_t Bitstream::total_bytes() const { return kHeaderBytes + 4 * chunks.size() + payload_bytes(); }

double Bitstream::bpp() const {
  const double pixels = static_cast<double>(header.width) * header.height * header.frame_count;
  return pixels > 0 ? 8.0 * static_cast<double>(total_bytes()) / pixels : 0.0;
}

void write_bitstream(const fs::path& path, const Bitstream& bits) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  const auto bytes = bits.serialize();
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

Bitstream read_bitstream(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open bitstream " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return Bitstream::parse(bytes);
}

double EncodeResult::estimated_bits() const {
  double s = 0.0;
  for (double b : estimated_chunk_bits) s += b;
  return s;
}

void check_compatible(const BitstreamHeader& h, const ModelConfig& c) {
  auto mismatch = [](const std::string& field, int64_t header, int64_t model) {
    throw ConfigError("config mismatch: bitstream " + field + " " + std::to_string(header) +
                      " vs checkpoint " + std::to_string(model));
  };
  if (h.width != c.width) mismatch("width", h.width, c.width);
  if (h.height != c.height) mismatch("height", h.height, c.height);
  if (h.preset_id != static_cast<uint8_t>(c.preset)) {
    mismatch("preset_id", h.preset_id, static_cast<int64_t>(c.preset));
  }
  if (h.intra_mode != static_cast<uint8_t>(c.intra_mode)) {
    mismatch("intra_mode", h.intra_mode, static_cast<int64_t>(c.intra_mode));
  }
  if (h.backbone_id != static_cast<uint8_t>(c.backbone)) {
    mismatch("backbone_id", h.backbone_id, static_cast<int64_t>(c.backbone));
  }
  if (h.precision_tag != c.precision_tag) mismatch("precision_tag", h.precision_tag, c.precision_tag);
  const uint8_t flags = c.backbone == BackboneId::kNonRecurrent ? kFlagNonRecurrent : 0;
  if (h.flags != flags) mismatch("flags", h.flags, flags);
}

namespace {

std::vector<int32_t> to_symbols(const torch::Tensor& latent) {
  const auto ints = latent.detach().to(torch::kCPU).to(torch::kInt32).contiguous();
  const int32_t* p = ints.data_ptr<int32_t>();
  return {p, p + ints.numel()};
}

torch::Tensor from_symbols(const std::vector<int32_t>& symbols, torch::IntArrayRef shape) {
  auto t = torch::empty(shape, torch::kInt32);
  std::copy(symbols.begin(), symbols.end(), t.data_ptr<int32_t>());
  return t.to(torch::kFloat32);
}

std::vector<uint8_t> code_latent(const torch::Tensor& latent, const CodingDistribution& dist) {
  return range_encode(to_symbols(latent), build_cdfs(dist));
}

torch::Tensor decode_latent(const std::vector<uint8_t>& chunk, const CodingDistribution& dist) {
  const auto tables = build_cdfs(dist);
  return from_symbols(range_decode(chunk, tables, tables.size()), dist.mean.sizes());
}

// Raw 8-bit frame, shared by both sides of the lossless intra mode.
torch::Tensor raw_to_tensor(const std::vector<uint8_t>& bytes, int64_t h, int64_t w) {
  if (static_cast<int64_t>(bytes.size()) != h * w * 3) {
    throw BitstreamError("corrupt chunk: raw intra frame has " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(h * w * 3));
  }
  auto t = torch::from_blob(const_cast<uint8_t*>(bytes.data()), {h, w, 3}, torch::kUInt8);
  return (t.to(torch::kFloat32) / 255.0).permute({2, 0, 1}).contiguous().unsqueeze(0);
}

struct Decoded {
  torch::Tensor frame;  // [1,3,H,W]
  bool intra = false;
  ChainState chain;
};

ChainState chain_for(const Model& model, const std::map<int64_t, Decoded>& done, int64_t ref,
                     int64_t h, int64_t w) {
  const auto& r = done.at(ref);
  if (r.intra) return model.backbone->init_chain(1, h, w, torch::TensorOptions().dtype(torch::kFloat32));
  return r.chain;
}

}  // namespace

EncodeResult encode_video(Model& model, const VideoClip& clip, const CodingPlan& plan) {
  const auto& cfg = model.config;
  if (clip.empty()) throw ConfigError("cannot encode an empty clip");
  if (clip.height() % kDownsampling != 0 || clip.width() % kDownsampling != 0) {
    throw ConfigError("clip size " + std::to_string(clip.width()) + "x" +
                      std::to_string(clip.height()) + " is not divisible by " +
                      std::to_string(kDownsampling));
  }
  if (clip.height() != cfg.height || clip.width() != cfg.width) {
    throw ConfigError("config mismatch: clip is " + std::to_string(clip.width()) + "x" +
                      std::to_string(clip.height()) + ", checkpoint expects " +
                      std::to_string(cfg.width) + "x" + std::to_string(cfg.height));
  }
  validate_plan(plan);
  if (plan.entries.size() != clip.size()) throw ConfigError("plan and clip lengths differ");
  if (plan.gop_size > 255) throw ConfigError("gop size must fit in one byte");

  torch::NoGradGuard no_grad;
  model.eval();
  const int64_t h = cfg.height, w = cfg.width;

  EncodeResult result;
  auto& hdr = result.bitstream.header;
  hdr.flags = cfg.backbone == BackboneId::kNonRecurrent ? kFlagNonRecurrent : 0;
  hdr.width = static_cast<uint16_t>(w);
  hdr.height = static_cast<uint16_t>(h);
  hdr.frame_count = static_cast<uint32_t>(clip.size());
  hdr.gop_size = static_cast<uint8_t>(plan.gop_size);
  hdr.gop_mode = static_cast<uint8_t>(plan.mode);
  hdr.preset_id = static_cast<uint8_t>(cfg.preset);
  hdr.intra_mode = static_cast<uint8_t>(cfg.intra_mode);
  hdr.backbone_id = static_cast<uint8_t>(cfg.backbone);
  hdr.precision_tag = cfg.precision_tag;

  std::map<int64_t, Decoded> done;
  auto& chunks = result.bitstream.chunks;
  for (const auto& e : plan.entries) {
    const auto x = clip[static_cast<size_t>(e.frame_index)].pixels().unsqueeze(0);
    Decoded d;
    if (e.kind == FrameKind::kIntra) {
      d.intra = true;
      if (cfg.intra_mode == IntraMode::kLossless) {
        chunks.push_back(frame_to_rgb8(Frame(x)));
        d.frame = raw_to_tensor(chunks.back(), h, w);
        result.estimated_chunk_bits.push_back(24.0 * static_cast<double>(h * w));
      } else {
        const auto out = model.intra->forward(x, QuantMode::kTest);
        chunks.push_back(code_latent(out.latent, out.dist));
        d.frame = out.reconstruction;
        result.estimated_chunk_bits.push_back(out.bits.item<double>());
      }
    } else {
      const auto ref = *e.reference;
      const auto out = model.backbone->forward(x, done.at(ref).frame,
                                               chain_for(model, done, ref, h, w), QuantMode::kTest);
      chunks.push_back(code_latent(out.latents.motion, out.prior.motion));
      chunks.push_back(code_latent(out.latents.residual, out.prior.residual));
      result.estimated_chunk_bits.push_back(out.motion_bits.item<double>());
      result.estimated_chunk_bits.push_back(out.residual_bits.item<double>());
      d.frame = out.reconstruction;
      d.chain = out.next;
    }
    done[e.frame_index] = std::move(d);
  }
  result.reconstructions.reserve(clip.size());
  for (int64_t i = 0; i < static_cast<int64_t>(clip.size()); ++i) {
    result.reconstructions.push_back(done.at(i).frame.squeeze(0));
  }
  return result;
}

std::vector<torch::Tensor> decode_video(Model& model, const Bitstream& bits) {
  const auto& hdr = bits.header;
  check_compatible(hdr, model.config);
  const int64_t h = hdr.height, w = hdr.width;
  const auto plan = plan_gop(hdr.frame_count, hdr.gop_size, static_cast<GopMode>(hdr.gop_mode));
  size_t expected = 0;
  for (const auto& e : plan.entries) expected += e.kind == FrameKind::kIntra ? 1 : 2;
  if (bits.chunks.size() != expected) {
    throw BitstreamError("corrupt chunk list: expected " + std::to_string(expected) +
                         " chunks, found " + std::to_string(bits.chunks.size()));
  }

  torch::NoGradGuard no_grad;
  model.eval();
  const int64_t lh = h / kDownsampling, lw = w / kDownsampling;
  const int64_t latent_c = model.config.generator.latent_channels;
  std::map<int64_t, Decoded> done;
  size_t next_chunk = 0;
  for (const auto& e : plan.entries) {
    Decoded d;
    try {
      if (e.kind == FrameKind::kIntra) {
        d.intra = true;
        const auto& chunk = bits.chunks[next_chunk++];
        if (model.config.intra_mode == IntraMode::kLossless) {
          d.frame = raw_to_tensor(chunk, h, w);
        } else {
          const auto dist = model.intra->prior(std::vector<int64_t>{1, latent_c, lh, lw});
          d.frame = model.intra->decode(decode_latent(chunk, dist));
        }
      } else {
        const auto ref = *e.reference;
        d.chain = chain_for(model, done, ref, h, w);
        const auto prior = model.backbone->prior(d.chain.previous, &d.chain.recurrent.prior);
        LatentCode latents;
        latents.motion = decode_latent(bits.chunks[next_chunk++], prior.motion);
        latents.residual = decode_latent(bits.chunks[next_chunk++], prior.residual);
        d.frame = model.backbone->reconstruct(latents, done.at(ref).frame, &d.chain);
      }
    } catch (const BitstreamError& err) {
      throw BitstreamError("corrupt chunk for frame " + std::to_string(e.frame_index) + ": " +
                           err.what());
    }
    done[e.frame_index] = std::move(d);
  }
  std::vector<torch::Tensor> frames;
  frames.reserve(done.size());
  for (int64_t i = 0; i < static_cast<int64_t>(hdr.frame_count); ++i) {
    frames.push_back(done.at(i).frame.squeeze(0));
  }
  return frames;
}

}  // namespace plvc
