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

#ifndef PLVC_RANGE_CODER_HPP_
#define PLVC_RANGE_CODER_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

#include "plvc/entropy_model.hpp"

namespace plvc {

inline constexpr uint32_t kCdfPrecisionBits = 16;
inline constexpr uint32_t kCdfTotal = 1u << kCdfPrecisionBits;
// Half-width of the directly coded symbol window, in standard deviations.
inline constexpr double kCdfTailWidth = 8.0;

/// Quantized cumulative frequencies for one coded element. Slots are, in
/// order: an optional low escape, the values lo..hi, an optional high escape.
/// An escape stands for every value between the window and the global symbol
/// range; the value itself follows, coded uniformly.
struct CdfTable {
  int32_t lo = 0;
  int32_t hi = 0;
  bool escape_low = false;
  bool escape_high = false;
  std::vector<uint32_t> cdf;  // slots + 1 entries, cdf[0] = 0, back() = kCdfTotal

  size_t slots() const { return cdf.size() - 1; }
  uint32_t frequency(size_t slot) const { return cdf[slot + 1] - cdf[slot]; }
  // Code length in bits of `value` under this table, escape payload included.
  double cost_bits(int32_t value) const;
  bool operator==(const CdfTable&) const = default;
};

// Table over values lo..lo+freqs.size()-1 with no escapes. Throws if the
// frequencies are zero or do not sum to kCdfTotal.
CdfTable make_table(int32_t lo, const std::vector<uint32_t>& freqs);

// Checks monotonicity, endpoints and the escape/window layout.
void validate_table(const CdfTable& table);

// Discretizes the Gaussian bin masses of N(mean, scale) over the window
// [mean - 8 scale, mean + 8 scale] clipped to [kSymbolMin, kSymbolMax].
// Every slot receives at least one count; the rounding remainder goes to
// the most probable slot. Double and integer arithmetic only.
CdfTable build_cdf(double mean, double scale);
CdfTable build_cdf(const CodingDistribution& dist, int64_t element_index);
std::vector<CdfTable> build_cdfs(const CodingDistribution& dist);

/// 32-bit range coder with byte-wise carry propagation into the output.
class RangeEncoder {
 public:
  void encode(uint32_t cum, uint32_t freq, uint32_t total);
  void encode_symbol(int32_t value, const CdfTable& table);
  // Terminates the stream; the encoder must not be used afterwards.
  std::vector<uint8_t> finish();

 private:
  void shift_low();
  void put(uint8_t byte);

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool skip_first_ = true;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> payload);

  // Two-step decode: target() yields a value in [0, total), the caller
  // locates the symbol and calls consume() with its interval.
  uint32_t target(uint32_t total);
  void consume(uint32_t cum, uint32_t freq);
  int32_t decode_symbol(const CdfTable& table);

 private:
  uint8_t next_byte();

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t step_ = 0;
};

std::vector<uint8_t> range_encode(const std::vector<int32_t>& symbols,
                                  const std::vector<CdfTable>& tables);
std::vector<int32_t> range_decode(std::span<const uint8_t> payload,
                                  const std::vector<CdfTable>& tables, size_t count);

// Sum of -log2(freq / total) over the sequence, escape payloads included.
double ideal_bits(const std::vector<int32_t>& symbols, const std::vector<CdfTable>& tables);

}  // namespace plvc

#endif  // PLVC_RANGE_CODER_HPP_
