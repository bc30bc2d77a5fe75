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

#include "plvc/coding_plan.hpp"

#include <vector>

#include "plvc/error.hpp"

namespace plvc {

namespace {

PlanEntry intra(int64_t index) { return {index, FrameKind::kIntra, std::nullopt, Direction::kForward}; }

PlanEntry predicted(int64_t index, int64_t ref, Direction dir) {
  return {index, FrameKind::kPredicted, ref, dir};
}

void forward_chain(std::vector<PlanEntry>& out, int64_t anchor, int64_t last) {
  for (int64_t f = anchor + 1; f <= last; ++f) out.push_back(predicted(f, f - 1, Direction::kForward));
}

}  // namespace

CodingPlan plan_gop(int64_t num_frames, int64_t gop_size, GopMode mode) {
  if (num_frames < 1) throw ConfigError("num_frames must be >= 1");
  if (gop_size < 2) throw ConfigError("gop_size must be >= 2");

  CodingPlan plan;
  plan.gop_size = gop_size;
  plan.mode = mode;
  auto& e = plan.entries;

  if (mode == GopMode::kIppp) {
    for (int64_t f = 0; f < num_frames; ++f) {
      if (f % gop_size == 0) {
        e.push_back(intra(f));
      } else {
        e.push_back(predicted(f, f - 1, Direction::kForward));
      }
    }
    return plan;
  }

  const int64_t p_frames = gop_size - 1;
  const int64_t backward_count = p_frames / 2;
  const int64_t forward_count = p_frames - backward_count;

  e.push_back(intra(0));
  for (int64_t anchor = 0; anchor < num_frames; anchor += gop_size) {
    const int64_t next = anchor + gop_size;
    if (next < num_frames) {
      e.push_back(intra(next));
      forward_chain(e, anchor, anchor + forward_count);
      for (int64_t f = next - 1; f > anchor + forward_count; --f) {
        e.push_back(predicted(f, f + 1, Direction::kBackward));
      }
    } else {
      forward_chain(e, anchor, num_frames - 1);
    }
  }
  validate_plan(plan);
  return plan;
}

void validate_plan(const CodingPlan& plan) {
  const int64_t n = plan.frame_count();
  std::vector<bool> decoded(static_cast<size_t>(n), false);
  for (const auto& entry : plan.entries) {
    if (entry.frame_index < 0 || entry.frame_index >= n) {
      throw ConfigError("plan frame index out of range: " + std::to_string(entry.frame_index));
    }
    if (decoded[entry.frame_index]) {
      throw ConfigError("frame listed twice in plan: " + std::to_string(entry.frame_index));
    }
    if (entry.kind == FrameKind::kIntra) {
      if (entry.reference) throw ConfigError("I entry must not carry a reference");
    } else {
      if (!entry.reference) throw ConfigError("P entry without reference");
      const int64_t r = *entry.reference;
      if (r < 0 || r >= n || !decoded[r]) {
        throw ConfigError("frame " + std::to_string(entry.frame_index) +
                          " references undecoded frame " + std::to_string(r));
      }
    }
    decoded[entry.frame_index] = true;
  }
}

std::string to_string(GopMode mode) { return mode == GopMode::kIppp ? "ippp" : "bi_ippp"; }

GopMode parse_gop_mode(const std::string& s) {
  if (s == "ippp") return GopMode::kIppp;
  if (s == "bi_ippp" || s == "bi") return GopMode::kBiIppp;
  throw ConfigError("unknown gop mode: " + s);
}

nlohmann::json plan_to_json(const CodingPlan& plan) {
  auto arr = nlohmann::json::array();
  for (const auto& e : plan.entries) {
    nlohmann::json item;
    item["index"] = e.frame_index;
    item["kind"] = e.kind == FrameKind::kIntra ? "I" : "P";
    item["ref"] = e.reference ? nlohmann::json(*e.reference) : nlohmann::json(nullptr);
    item["dir"] = e.direction == Direction::kForward ? "forward" : "backward";
    arr.push_back(std::move(item));
  }
  return arr;
}

CodingPlan plan_from_json(const nlohmann::json& j, int64_t gop_size, GopMode mode) {
  CodingPlan plan;
  plan.gop_size = gop_size;
  plan.mode = mode;
  try {
    for (const auto& item : j) {
      PlanEntry e;
      e.frame_index = item.at("index").get<int64_t>();
      const auto kind = item.at("kind").get<std::string>();
      if (kind != "I" && kind != "P") throw ConfigError("bad plan kind: " + kind);
      e.kind = kind == "I" ? FrameKind::kIntra : FrameKind::kPredicted;
      if (!item.at("ref").is_null()) e.reference = item.at("ref").get<int64_t>();
      const auto dir = item.at("dir").get<std::string>();
      if (dir != "forward" && dir != "backward") throw ConfigError("bad plan dir: " + dir);
      e.direction = dir == "forward" ? Direction::kForward : Direction::kBackward;
      plan.entries.push_back(e);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed coding plan: ") + ex.what());
  }
  validate_plan(plan);
  return plan;
}

}  // namespace plvc
