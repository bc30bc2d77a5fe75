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

#include "plvc/preset.hpp"

#include <array>
#include <cmath>

#include "plvc/error.hpp"

namespace plvc {
namespace {

constexpr std::array<QualityPreset, 3> kPresets{{
    {PresetId::kLow, "low", 0.025, 256.0, 3.0, 0.010, 100.0, 0.1},
    {PresetId::kMedium, "medium", 0.050, 512.0, 1.0, 0.010, 100.0, 0.1},
    {PresetId::kHigh, "high", 0.100, 1024.0, 0.3, 0.001, 100.0, 0.1},
}};

}  // namespace

const QualityPreset& preset(PresetId id) {
  const auto i = static_cast<size_t>(id);
  if (i >= kPresets.size()) throw ConfigError("unknown preset id " + std::to_string(i));
  return kPresets[i];
}

const QualityPreset& preset_by_name(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name == p.name) return p;
  }
  throw ConfigError("unknown preset '" + name + "' (expected low, medium or high)");
}

PresetId preset_id_from_byte(uint8_t byte) {
  if (byte >= kPresets.size()) throw BitstreamError("invalid preset id " + std::to_string(byte));
  return static_cast<PresetId>(byte);
}

double alpha_schedule(double measured_bpp, const QualityPreset& p, double rate_scale) {
  if (!(measured_bpp >= 0.0) || !std::isfinite(measured_bpp)) {
    throw ModelError("alpha_schedule: rate must be finite and non-negative");
  }
  return measured_bpp >= p.rate_target * rate_scale ? p.alpha1 : p.alpha2;
}

}  // namespace plvc
