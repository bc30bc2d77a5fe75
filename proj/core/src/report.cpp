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

#include "plvc/report.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "plvc/bitstream.hpp"
#include "plvc/error.hpp"
#include "plvc/preset.hpp"

namespace plvc {
namespace fs = std::filesystem;

namespace {

nlohmann::json position_json(const PositionStats& s) {
  return {{"mean", s.mean}, {"count", s.count}};
}

std::vector<std::pair<std::string, fs::path>> list_sequences(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  if (fs::exists(dir / format_frame_name(kDefaultFramePattern, 1))) {
    return {{dir.filename().string(), dir}};
  }
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / format_frame_name(kDefaultFramePattern, 1))) {
      out.emplace_back(entry.path().filename().string(), entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no sequences found under " + dir.string());
  return out;
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : sequences) {
    seqs.push_back({{"name", s.name},
                    {"bpp", s.bpp},
                    {"psnr", s.psnr},
                    {"ms_ssim", s.ms_ssim},
                    {"lpips_like", s.lpips_like},
                    {"fid", s.fid}});
  }
  return {{"preset", preset},
          {"rate_scale", rate_scale},
          {"embedder", embedder},
          {"sequences", seqs},
          {"aggregate",
           {{"fid", fid},
            {"kid", kid},
            {"bpp", bpp},
            {"per_position",
             {{"lpips_like", position_json(per_position_lpips)},
              {"psnr", position_json(per_position_psnr)}}}}}};
}

std::string MetricReport::to_csv() const {
  std::string out = "name,bpp,psnr,ms_ssim,lpips_like,fid\n";
  char buf[256];
  for (const auto& s : sequences) {
    std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%.9g,%.9g,%.9g\n", s.bpp, s.psnr, s.ms_ssim,
                  s.lpips_like, s.fid);
    out += s.name + buf;
  }
  return out;
}

MetricReport rate_quality_report(const EvalInputs& in) {
  const auto raw = list_sequences(in.raw_dir);
  std::map<std::string, fs::path> bits;
  for (const auto& p : in.bitstreams) bits[p.stem().string()] = p;
  const bool single = raw.size() == 1 && in.bitstreams.size() == 1;
  if (!single && bits.size() != raw.size()) {
    throw ConfigError("sequence lists differ: " + std::to_string(raw.size()) + " raw sequences, " +
                      std::to_string(bits.size()) + " bitstreams");
  }

  RandomConvEmbedder embedder(in.embedder_seed);
  MetricReport report;
  report.rate_scale = in.rate_scale;
  report.embedder = embedder.identifier();
  std::vector<torch::Tensor> raw_feats, rec_feats;
  std::vector<std::vector<double>> lpips_values, psnr_values;
  std::vector<CodingPlan> plans;
  std::string preset_name;

  for (const auto& [name, raw_path] : raw) {
    const fs::path rec_path = raw.size() == 1 && fs::exists(in.rec_dir / format_frame_name(kDefaultFramePattern, 1))
                                  ? in.rec_dir
                                  : in.rec_dir / name;
    const auto it = single ? bits.begin() : bits.find(name);
    if (it == bits.end()) throw ConfigError("no bitstream for sequence '" + name + "'");
    const VideoClip a = load_clip(raw_path);
    const VideoClip b = load_clip(rec_path);
    if (a.size() != b.size() || a.height() != b.height() || a.width() != b.width()) {
      throw ConfigError("sequence '" + name + "': raw and reconstructed clips differ in shape");
    }
    const auto stream = read_bitstream(it->second);
    if (stream.header.frame_count != a.size() || stream.header.width != a.width() ||
        stream.header.height != a.height()) {
      throw ConfigError("sequence '" + name + "': bitstream header does not match the frames");
    }
    const std::string p = preset(preset_id_from_byte(stream.header.preset_id)).name;
    preset_name = preset_name.empty() || preset_name == p ? p : "mixed";

    SequenceMetrics m;
    m.name = name;
    const double pixels = static_cast<double>(a.width() * a.height() * static_cast<int64_t>(a.size()));
    m.bpp = 8.0 * static_cast<double>(fs::file_size(it->second)) / pixels;
    const auto ta = a.to_tensor(), tb = b.to_tensor();
    const auto lp = lpips_like(ta, tb, embedder);
    double ssim_sum = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
      m.frame_psnr.push_back(psnr(a[t], b[t]));
      m.frame_lpips.push_back(lp[static_cast<int64_t>(t)].item<double>());
      ssim_sum += ms_ssim(a[t], b[t]);
    }
    const double n = static_cast<double>(a.size());
    double psnr_sum = 0.0, lpips_sum = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
      psnr_sum += m.frame_psnr[t];
      lpips_sum += m.frame_lpips[t];
    }
    m.psnr = psnr_sum / n;
    m.ms_ssim = ssim_sum / n;
    m.lpips_like = lpips_sum / n;
    const auto fa = embedder.embed(ta).to(torch::kFloat64);
    const auto fb = embedder.embed(tb).to(torch::kFloat64);
    m.fid = fid(fa, fb);
    raw_feats.push_back(fa);
    rec_feats.push_back(fb);
    lpips_values.push_back(m.frame_lpips);
    psnr_values.push_back(m.frame_psnr);
    plans.push_back(plan_gop(stream.header.frame_count, stream.header.gop_size,
                             static_cast<GopMode>(stream.header.gop_mode)));
    report.bpp += m.bpp;
    report.sequences.push_back(std::move(m));
  }
  report.preset = preset_name;
  report.bpp /= static_cast<double>(report.sequences.size());
  const auto all_raw = torch::cat(raw_feats), all_rec = torch::cat(rec_feats);
  report.fid = fid(all_raw, all_rec);
  if (all_raw.size(0) < 2) throw ConfigError("kid needs at least two frames in total");
  report.kid = kid(all_raw, all_rec);
  report.per_position_lpips = per_position_stats(lpips_values, plans);
  report.per_position_psnr = per_position_stats(psnr_values, plans);
  return report;
}

void write_report(const MetricReport& report, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << report.to_json().dump(2) << "\n";
  }
  auto csv = path;
  csv.replace_extension(".csv");
  std::ofstream f(csv);
  if (!f) throw IoError("cannot write " + csv.string());
  f << report.to_csv();
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<fs::path> out;
  if (rc == 0) {
    for (size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed for " + pattern);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace plvc
