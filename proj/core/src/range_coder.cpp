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

#include "plvc/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "plvc/error.hpp"

namespace plvc {
namespace {

constexpr uint32_t kTop = 1u << 24;

// Upper-tail probability P(Z > x) for a standard normal.
double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

uint32_t escape_count_low(const CdfTable& t) { return static_cast<uint32_t>(t.lo - kSymbolMin); }
uint32_t escape_count_high(const CdfTable& t) { return static_cast<uint32_t>(kSymbolMax - t.hi); }

}  // namespace

double CdfTable::cost_bits(int32_t value) const {
  const size_t base = escape_low ? 1 : 0;
  auto bits = [&](size_t slot) { return -std::log2(static_cast<double>(frequency(slot)) / kCdfTotal); };
  if (value >= lo && value <= hi) return bits(base + static_cast<size_t>(value - lo));
  if (value < lo && escape_low && value >= kSymbolMin) {
    return bits(0) + std::log2(static_cast<double>(escape_count_low(*this)));
  }
  if (value > hi && escape_high && value <= kSymbolMax) {
    return bits(slots() - 1) + std::log2(static_cast<double>(escape_count_high(*this)));
  }
  throw BitstreamError("symbol " + std::to_string(value) + " is outside the table range");
}

CdfTable make_table(int32_t lo, const std::vector<uint32_t>& freqs) {
  if (freqs.empty()) throw BitstreamError("make_table: empty alphabet");
  CdfTable t;
  t.lo = lo;
  t.hi = lo + static_cast<int32_t>(freqs.size()) - 1;
  t.cdf.assign(1, 0);
  for (uint32_t f : freqs) t.cdf.push_back(t.cdf.back() + f);
  validate_table(t);
  return t;
}

void validate_table(const CdfTable& t) {
  if (t.cdf.size() < 2 || t.cdf.front() != 0 || t.cdf.back() != kCdfTotal) {
    throw BitstreamError("cdf table must start at 0 and end at 65536");
  }
  for (size_t i = 0; i + 1 < t.cdf.size(); ++i) {
    if (t.cdf[i + 1] <= t.cdf[i]) throw BitstreamError("cdf table has a zero-frequency slot");
  }
  const size_t expected = static_cast<size_t>(t.hi - t.lo + 1) + (t.escape_low ? 1 : 0) +
                          (t.escape_high ? 1 : 0);
  if (t.hi < t.lo || t.slots() != expected) throw BitstreamError("cdf table window/slot mismatch");
  if ((t.escape_low && t.lo <= kSymbolMin) || (t.escape_high && t.hi >= kSymbolMax)) {
    throw BitstreamError("cdf table escape without room outside the window");
  }
}

CdfTable build_cdf(double mean, double scale) {
  if (!std::isfinite(mean) || !std::isfinite(scale)) {
    throw ModelError("build_cdf: non-finite distribution parameters");
  }
  scale = std::max(scale, kScaleFloor);
  CdfTable t;
  const double lo = std::floor(mean - kCdfTailWidth * scale);
  const double hi = std::ceil(mean + kCdfTailWidth * scale);
  t.lo = static_cast<int32_t>(std::clamp(lo, double(kSymbolMin), double(kSymbolMax)));
  t.hi = static_cast<int32_t>(std::clamp(hi, double(kSymbolMin), double(kSymbolMax)));
  t.escape_low = t.lo > kSymbolMin;
  t.escape_high = t.hi < kSymbolMax;

  std::vector<double> mass;
  mass.reserve(static_cast<size_t>(t.hi - t.lo + 3));
  if (t.escape_low) mass.push_back(upper_tail((mean - (t.lo - 0.5)) / scale));
  for (int32_t v = t.lo; v <= t.hi; ++v) mass.push_back(bin_mass(v, mean, scale));
  if (t.escape_high) mass.push_back(upper_tail((t.hi + 0.5 - mean) / scale));

  const auto n = static_cast<uint32_t>(mass.size());
  double total_mass = 0.0;
  for (double m : mass) total_mass += m;
  std::vector<uint32_t> freq(n, 1);
  if (total_mass > 0.0) {
    const double spread = static_cast<double>(kCdfTotal - n);
    for (uint32_t i = 0; i < n; ++i) {
      freq[i] += static_cast<uint32_t>(std::floor(mass[i] / total_mass * spread));
    }
  }
  uint32_t assigned = 0;
  for (uint32_t f : freq) assigned += f;
  const auto top = static_cast<size_t>(std::max_element(mass.begin(), mass.end()) - mass.begin());
  freq[top] += kCdfTotal - assigned;

  t.cdf.assign(1, 0);
  for (uint32_t f : freq) t.cdf.push_back(t.cdf.back() + f);
  return t;
}

CdfTable build_cdf(const CodingDistribution& dist, int64_t element_index) {
  const auto mean = dist.mean.reshape(-1);
  const auto scale = dist.scale.reshape(-1);
  if (element_index < 0 || element_index >= mean.numel() || mean.numel() != scale.numel()) {
    throw ModelError("build_cdf: element index out of range");
  }
  return build_cdf(mean[element_index].item<double>(), scale[element_index].item<double>());
}

std::vector<CdfTable> build_cdfs(const CodingDistribution& dist) {
  if (dist.mean.sizes() != dist.scale.sizes()) throw ModelError("build_cdfs: shape mismatch");
  const auto mean = dist.mean.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  const auto scale = dist.scale.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  const float* m = mean.data_ptr<float>();
  const float* s = scale.data_ptr<float>();
  std::vector<CdfTable> tables;
  tables.reserve(static_cast<size_t>(mean.numel()));
  for (int64_t i = 0; i < mean.numel(); ++i) tables.push_back(build_cdf(m[i], s[i]));
  return tables;
}

void RangeEncoder::put(uint8_t byte) {
  // The first byte carries no information: the initial interval never
  // overflows into it.
  if (skip_first_) {
    skip_first_ = false;
    return;
  }
  out_.push_back(byte);
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      put(static_cast<uint8_t>(pending + carry));
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
  if (freq == 0 || total == 0 || total > kCdfTotal || cum + freq > total) {
    throw BitstreamError("range encoder: invalid interval");
  }
  const uint32_t r = range_ / total;
  low_ += static_cast<uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(int32_t value, const CdfTable& t) {
  const size_t base = t.escape_low ? 1 : 0;
  if (value >= t.lo && value <= t.hi) {
    const size_t slot = base + static_cast<size_t>(value - t.lo);
    encode(t.cdf[slot], t.frequency(slot), kCdfTotal);
  } else if (value < t.lo && t.escape_low && value >= kSymbolMin) {
    encode(t.cdf[0], t.frequency(0), kCdfTotal);
    encode(static_cast<uint32_t>(value - kSymbolMin), 1, escape_count_low(t));
  } else if (value > t.hi && t.escape_high && value <= kSymbolMax) {
    const size_t slot = t.slots() - 1;
    encode(t.cdf[slot], t.frequency(slot), kCdfTotal);
    encode(static_cast<uint32_t>(value - t.hi - 1), 1, escape_count_high(t));
  } else {
    throw BitstreamError("range encoder: symbol " + std::to_string(value) +
                         " outside the table range");
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  // Pick the point of [low, low + range) with the most trailing zero bytes;
  // range >= 2^24 guarantees a multiple of 2^24 inside. The decoder supplies
  // the omitted zero bytes.
  low_ = (low_ + kTop - 1) & ~static_cast<uint64_t>(kTop - 1);
  shift_low();
  shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> payload) : data_(payload) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ < data_.size()) return data_[pos_++];
  // Up to three implicit zero bytes follow the flushed stream.
  if (++pos_ > data_.size() + 3) throw BitstreamError("range decoder: truncated payload");
  return 0;
}

uint32_t RangeDecoder::target(uint32_t total) {
  if (total == 0 || total > kCdfTotal) throw BitstreamError("range decoder: invalid total");
  step_ = range_ / total;
  return std::min(code_ / step_, total - 1);
}

void RangeDecoder::consume(uint32_t cum, uint32_t freq) {
  code_ -= step_ * cum;
  range_ = step_ * freq;
  if (code_ >= range_) throw BitstreamError("range decoder: corrupt payload");
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

int32_t RangeDecoder::decode_symbol(const CdfTable& t) {
  const uint32_t q = target(kCdfTotal);
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), q);
  const auto slot = static_cast<size_t>(it - t.cdf.begin()) - 1;
  consume(t.cdf[slot], t.frequency(slot));
  if (t.escape_low && slot == 0) {
    const uint32_t n = escape_count_low(t);
    const uint32_t v = target(n);
    consume(v, 1);
    return kSymbolMin + static_cast<int32_t>(v);
  }
  if (t.escape_high && slot == t.slots() - 1) {
    const uint32_t n = escape_count_high(t);
    const uint32_t v = target(n);
    consume(v, 1);
    return t.hi + 1 + static_cast<int32_t>(v);
  }
  return t.lo + static_cast<int32_t>(slot - (t.escape_low ? 1 : 0));
}

std::vector<uint8_t> range_encode(const std::vector<int32_t>& symbols,
                                  const std::vector<CdfTable>& tables) {
  if (symbols.size() != tables.size()) {
    throw BitstreamError("range_encode: " + std::to_string(symbols.size()) + " symbols but " +
                         std::to_string(tables.size()) + " tables");
  }
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) enc.encode_symbol(symbols[i], tables[i]);
  return enc.finish();
}

std::vector<int32_t> range_decode(std::span<const uint8_t> payload,
                                  const std::vector<CdfTable>& tables, size_t count) {
  if (tables.size() != count) {
    throw BitstreamError("range_decode: " + std::to_string(count) + " symbols requested but " +
                         std::to_string(tables.size()) + " tables given");
  }
  RangeDecoder dec(payload);
  std::vector<int32_t> out;
  out.reserve(count);
  for (const auto& t : tables) out.push_back(dec.decode_symbol(t));
  return out;
}

double ideal_bits(const std::vector<int32_t>& symbols, const std::vector<CdfTable>& tables) {
  if (symbols.size() != tables.size()) throw BitstreamError("ideal_bits: size mismatch");
  double bits = 0.0;
  for (size_t i = 0; i < symbols.size(); ++i) bits += tables[i].cost_bits(symbols[i]);
  return bits;
}

}  // namespace plvc
