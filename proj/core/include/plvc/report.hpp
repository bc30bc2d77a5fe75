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

#ifndef PLVC_REPORT_HPP_
#define PLVC_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plvc/metrics.hpp"

namespace plvc {

struct SequenceMetrics {
  std::string name;
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
  double lpips_like = 0.0;
  double fid = 0.0;  // per-sequence, diagnostic only
  std::vector<double> frame_psnr;
  std::vector<double> frame_lpips;
};

struct MetricReport {
  std::string preset;
  double rate_scale = 1.0;
  std::string embedder;
  std::vector<SequenceMetrics> sequences;
  double fid = 0.0;
  double kid = 0.0;
  double bpp = 0.0;  // mean over sequences
  PositionStats per_position_lpips;
  PositionStats per_position_psnr;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct EvalInputs {
  std::filesystem::path raw_dir;
  std::filesystem::path rec_dir;
  // One bitstream per sequence, matched by file stem.
  std::vector<std::filesystem::path> bitstreams;
  uint64_t embedder_seed = 0;
  double rate_scale = 1.0;
};

// Sequences are the sub-directories of raw_dir holding im*.png frames, or
// raw_dir itself when it holds frames directly. rec_dir must mirror it.
MetricReport rate_quality_report(const EvalInputs& inputs);

// Writes `path` (JSON, sorted keys) and the CSV mirror next to it.
void write_report(const MetricReport& report, const std::filesystem::path& path);

// Expands a file glob with '*' and '?' in the final path component.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

}  // namespace plvc

#endif  // PLVC_REPORT_HPP_
