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

#ifndef PLVC_CODING_PLAN_HPP_
#define PLVC_CODING_PLAN_HPP_

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plvc {

enum class FrameKind : uint8_t { kIntra, kPredicted };
enum class Direction : uint8_t { kForward, kBackward };
enum class GopMode : uint8_t { kIppp = 0, kBiIppp = 1 };

struct PlanEntry {
  int64_t frame_index = 0;
  FrameKind kind = FrameKind::kIntra;
  std::optional<int64_t> reference;  // set iff kind == kPredicted
  Direction direction = Direction::kForward;

  bool operator==(const PlanEntry&) const = default;
};

// Frames listed in decode order. Every P entry references a frame that appears
// earlier in the list.
struct CodingPlan {
  std::vector<PlanEntry> entries;
  int64_t gop_size = 9;
  GopMode mode = GopMode::kIppp;

  int64_t frame_count() const { return static_cast<int64_t>(entries.size()); }
};

// ippp: I every gop_size frames, P-chains forward.
// bi_ippp: between I_k and I_{k+g}, the first ceil((g-1)/2) frames chain
// forward from I_k and the rest chain backward from I_{k+g}. Frames after the
// last I that lack a following I chain forward.
CodingPlan plan_gop(int64_t num_frames, int64_t gop_size, GopMode mode);

// Throws ConfigError unless every reference is decoded before use and every
// frame appears exactly once.
void validate_plan(const CodingPlan& plan);

std::string to_string(GopMode mode);
GopMode parse_gop_mode(const std::string& s);

// [{index, kind: "I"|"P", ref: int|null, dir: "forward"|"backward"}, ...]
nlohmann::json plan_to_json(const CodingPlan& plan);
CodingPlan plan_from_json(const nlohmann::json& j, int64_t gop_size, GopMode mode);

}  // namespace plvc

#endif  // PLVC_CODING_PLAN_HPP_
