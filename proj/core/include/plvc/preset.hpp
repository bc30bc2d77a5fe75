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

#ifndef PLVC_PRESET_HPP_
#define PLVC_PRESET_HPP_

#include <cstdint>
#include <string>

namespace plvc {

enum class PresetId : uint8_t { kLow = 0, kMedium = 1, kHigh = 2 };

// Rate target and loss weights of one operating point.
struct QualityPreset {
  PresetId id;
  const char* name;
  double rate_target;   // R_T, bpp
  double lambda;        // warm-up distortion weight
  double alpha1;        // rate weight above the target
  double alpha2;        // rate weight below the target
  double lambda_prime;  // adversarial-phase distortion weight
  double beta;          // adversarial weight
};

const QualityPreset& preset(PresetId id);
const QualityPreset& preset_by_name(const std::string& name);
PresetId preset_id_from_byte(uint8_t byte);

// alpha1 when measured_bpp >= rate_target * rate_scale, alpha2 otherwise.
double alpha_schedule(double measured_bpp, const QualityPreset& p, double rate_scale = 1.0);

}  // namespace plvc

#endif  // PLVC_PRESET_HPP_
