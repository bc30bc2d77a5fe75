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

#include "plvc/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

#include "plvc/error.hpp"

namespace plvc {
namespace F = torch::nn::functional;

namespace {

torch::Tensor as_batch(const torch::Tensor& x) {
  if (x.dim() == 3) return x.unsqueeze(0);
  if (x.dim() == 4) return x;
  throw ConfigError("expected an image tensor [3,H,W] or [B,3,H,W]");
}

void require_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) throw ConfigError(std::string(what) + ": image dimensions differ");
}

}  // namespace

double psnr(const torch::Tensor& a, const torch::Tensor& b) {
  require_same(a, b, "psnr");
  const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double psnr(const Frame& a, const Frame& b) { return psnr(a.pixels(), b.pixels()); }

int ms_ssim_scales(int64_t height, int64_t width) {
  const int64_t m = std::min(height, width);
  if (m >= 160) return 5;
  if (m >= 44) return 3;
  throw ConfigError("ms_ssim needs frames of at least 44 px (got " + std::to_string(m) + ")");
}

namespace {

constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int64_t kWindow = 11;
constexpr double kSigma = 1.5;

torch::Tensor gaussian_taps(int64_t length) {
  auto taps = torch::empty({length}, torch::kFloat64);
  const double centre = static_cast<double>(length - 1) / 2.0;
  for (int64_t i = 0; i < length; ++i) {
    const double d = static_cast<double>(i) - centre;
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  return taps / taps.sum();
}

// Separable valid-mode Gaussian filter over [N,1,H,W]; the window shrinks
// to the image extent when an axis is shorter than 11 px.
torch::Tensor blur(const torch::Tensor& x) {
  const int64_t kh = std::min(kWindow, x.size(2));
  const int64_t kw = std::min(kWindow, x.size(3));
  auto y = F::conv2d(x, gaussian_taps(kw).view({1, 1, 1, kw}));
  return F::conv2d(y, gaussian_taps(kh).view({1, 1, kh, 1}));
}

}  // namespace

double ms_ssim(const torch::Tensor& a, const torch::Tensor& b) {
  require_same(a, b, "ms_ssim");
  auto x = as_batch(a).to(torch::kFloat64);
  auto y = as_batch(b).to(torch::kFloat64);
  const int scales = ms_ssim_scales(x.size(2), x.size(3));
  x = x.reshape({-1, 1, x.size(2), x.size(3)});
  y = y.reshape({-1, 1, y.size(2), y.size(3)});
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += kMsSsimWeights[s];

  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  auto score = torch::ones({x.size(0)}, torch::kFloat64);
  for (int s = 0; s < scales; ++s) {
    const auto mx = blur(x), my = blur(y);
    const auto sxx = blur(x * x) - mx * mx;
    const auto syy = blur(y * y) - my * my;
    const auto sxy = blur(x * y) - mx * my;
    const auto cs_map = (2.0 * sxy + c2) / (sxx + syy + c2);
    const double w = kMsSsimWeights[s] / weight_sum;
    if (s + 1 < scales) {
      score = score * cs_map.mean({1, 2, 3}).clamp_min(0.0).pow(w);
      x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2));
      y = F::avg_pool2d(y, F::AvgPool2dFuncOptions(2));
    } else {
      const auto l_map = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
      score = score * (l_map * cs_map).mean({1, 2, 3}).clamp_min(0.0).pow(w);
    }
  }
  return score.mean().item<double>();
}

double ms_ssim(const Frame& a, const Frame& b) { return ms_ssim(a.pixels(), b.pixels()); }

torch::Tensor FeatureEmbedder::embed(const torch::Tensor& images) const {
  return layers(images).back().mean({2, 3});
}

RandomConvEmbedder::RandomConvEmbedder(uint64_t seed) : seed_(seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const std::array<std::pair<int64_t, int64_t>, 3> shapes{{{3, 16}, {16, 32}, {32, 64}}};
  for (const auto& [in, out] : shapes) {
    const double std = std::sqrt(2.0 / static_cast<double>(in * 9));
    weights_.push_back(torch::randn({out, in, 3, 3}, gen, torch::kFloat32) * std);
    biases_.push_back(torch::randn({out}, gen, torch::kFloat32) * 0.1);
  }
}

std::string RandomConvEmbedder::identifier() const {
  return "random_conv3_seed" + std::to_string(seed_);
}

std::vector<torch::Tensor> RandomConvEmbedder::layers(const torch::Tensor& images) const {
  torch::NoGradGuard no_grad;
  auto h = as_batch(images).to(torch::kFloat32) * 2.0 - 1.0;
  std::vector<torch::Tensor> out;
  const std::array<int64_t, 3> strides{1, 2, 2};
  for (size_t i = 0; i < weights_.size(); ++i) {
    h = torch::relu(F::conv2d(h, weights_[i], F::Conv2dFuncOptions().bias(biases_[i]).stride(strides[i]).padding(1)));
    out.push_back(h);
  }
  return out;
}

torch::Tensor lpips_like(const torch::Tensor& a, const torch::Tensor& b,
                         const FeatureEmbedder& embedder) {
  require_same(a, b, "lpips_like");
  const auto fa = embedder.layers(a);
  const auto fb = embedder.layers(b);
  auto total = torch::zeros({as_batch(a).size(0)}, torch::kFloat64);
  auto unit = [](const torch::Tensor& f) {
    const auto d = f.to(torch::kFloat64);
    return d / (d.pow(2).sum(1, true).sqrt() + 1e-10);
  };
  for (size_t l = 0; l < fa.size(); ++l) {
    total = total + (unit(fa[l]) - unit(fb[l])).pow(2).sum(1).mean({1, 2});
  }
  return total;
}

double lpips_like(const Frame& a, const Frame& b, const FeatureEmbedder& embedder) {
  return lpips_like(a.pixels(), b.pixels(), embedder).item<double>();
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix to_eigen(const torch::Tensor& t) {
  const auto d = t.to(torch::kCPU, torch::kFloat64).contiguous();
  const auto rows = d.dim() == 1 ? d.size(0) : d.size(0);
  const auto cols = d.dim() == 1 ? 1 : d.size(1);
  return Eigen::Map<const RowMatrix>(d.data_ptr<double>(), rows, cols);
}

// Trace of (A B)^(1/2) for symmetric PSD A, B via A^(1/2) B A^(1/2).
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a);
  const Eigen::VectorXd root = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * root.asDiagonal() * ea.eigenvectors().transpose();
  Eigen::MatrixXd m = sqrt_a * b * sqrt_a;
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(m, Eigen::EigenvaluesOnly);
  return em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

double frechet(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
               const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b) {
  const double mean_term = (mu_a - mu_b).squaredNorm();
  const double value =
      mean_term + cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt_product(cov_a, cov_b);
  return std::max(0.0, value);
}

void require_features(const torch::Tensor& a, const torch::Tensor& b, int64_t min_rows,
                      const char* what) {
  if (a.dim() != 2 || b.dim() != 2 || a.size(1) != b.size(1)) {
    throw ConfigError(std::string(what) + ": feature sets must be [N, F] with equal F");
  }
  if (a.size(0) < min_rows || b.size(0) < min_rows) {
    throw ConfigError(std::string(what) + ": each feature set needs at least " +
                      std::to_string(min_rows) + " samples");
  }
}

}  // namespace

double fid(const torch::Tensor& features_a, const torch::Tensor& features_b) {
  require_features(features_a, features_b, 1, "fid");
  if (features_a.sizes() == features_b.sizes() && torch::equal(features_a, features_b)) return 0.0;
  auto stats = [](const torch::Tensor& f) {
    const RowMatrix x = to_eigen(f);
    const Eigen::VectorXd mu = x.colwise().mean().transpose();
    const RowMatrix centred = x.rowwise() - mu.transpose();
    const double denom = std::max<double>(1.0, static_cast<double>(x.rows() - 1));
    Eigen::MatrixXd cov = (centred.transpose() * centred) / denom;
    cov += 1e-6 * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    return std::make_pair(mu, cov);
  };
  const auto [mu_a, cov_a] = stats(features_a);
  const auto [mu_b, cov_b] = stats(features_b);
  return frechet(mu_a, cov_a, mu_b, cov_b);
}

double fid_from_stats(const torch::Tensor& mean_a, const torch::Tensor& cov_a,
                      const torch::Tensor& mean_b, const torch::Tensor& cov_b) {
  const Eigen::VectorXd ma = to_eigen(mean_a.reshape(-1));
  const Eigen::VectorXd mb = to_eigen(mean_b.reshape(-1));
  const int64_t f = ma.size();
  if (mb.size() != f || cov_a.numel() != f * f || cov_b.numel() != f * f) {
    throw ConfigError("fid_from_stats: inconsistent statistic shapes");
  }
  const Eigen::MatrixXd ca = to_eigen(cov_a.reshape({f, f}));
  const Eigen::MatrixXd cb = to_eigen(cov_b.reshape({f, f}));
  return frechet(ma, ca, mb, cb);
}

double mmd2_unbiased(const torch::Tensor& features_a, const torch::Tensor& features_b) {
  require_features(features_a, features_b, 2, "kid");
  const auto x = features_a.to(torch::kFloat64);
  const auto y = features_b.to(torch::kFloat64);
  const double dim = static_cast<double>(x.size(1));
  auto kernel = [&](const torch::Tensor& p, const torch::Tensor& q) {
    return (torch::mm(p, q.t()) / dim + 1.0).pow(3);
  };
  const auto kxx = kernel(x, x), kyy = kernel(y, y), kxy = kernel(x, y);
  const double m = static_cast<double>(x.size(0)), n = static_cast<double>(y.size(0));
  if (x.size(0) == y.size(0)) {
    const auto h = kxx + kyy - kxy - kxy.t();
    return (h.sum() - h.diagonal().sum()).item<double>() / (m * (m - 1.0));
  }
  const double sxx = (kxx.sum() - kxx.diagonal().sum()).item<double>() / (m * (m - 1.0));
  const double syy = (kyy.sum() - kyy.diagonal().sum()).item<double>() / (n * (n - 1.0));
  const double sxy = kxy.sum().item<double>() / (m * n);
  return sxx + syy - 2.0 * sxy;
}

double kid(const torch::Tensor& features_a, const torch::Tensor& features_b, int64_t block_size) {
  require_features(features_a, features_b, 2, "kid");
  if (block_size < 2) throw ConfigError("kid: block size must be at least 2");
  const int64_t m = features_a.size(0), n = features_b.size(0);
  const int64_t blocks = std::max<int64_t>(1, std::min(m, n) / block_size);
  double total = 0.0;
  for (int64_t i = 0; i < blocks; ++i) {
    total += mmd2_unbiased(features_a.slice(0, i * m / blocks, (i + 1) * m / blocks),
                           features_b.slice(0, i * n / blocks, (i + 1) * n / blocks));
  }
  return total / static_cast<double>(blocks);
}

torch::Tensor temporal_profile(const VideoClip& clip, int64_t row) {
  if (clip.empty()) throw ConfigError("temporal_profile: empty clip");
  if (row < 0 || row >= clip.height()) {
    throw ConfigError("row " + std::to_string(row) + " out of range; valid rows are 0.." +
                      std::to_string(clip.height() - 1));
  }
  std::vector<torch::Tensor> rows;
  rows.reserve(clip.size());
  for (const auto& f : clip.frames()) rows.push_back(f.pixels().select(1, row));
  return torch::stack(rows, 1).contiguous();
}

PositionStats per_position_stats(const std::vector<std::vector<double>>& values,
                                 const std::vector<CodingPlan>& plans) {
  if (values.size() != plans.size()) throw ConfigError("per_position_stats: one plan per sequence");
  if (plans.empty()) throw ConfigError("per_position_stats: no sequences");
  const int64_t gop = plans.front().gop_size;
  PositionStats stats;
  stats.mean.assign(static_cast<size_t>(gop - 1), 0.0);
  stats.count.assign(static_cast<size_t>(gop - 1), 0);
  for (size_t s = 0; s < plans.size(); ++s) {
    const auto& plan = plans[s];
    validate_plan(plan);
    if (plan.gop_size != gop) throw ConfigError("per_position_stats: plans mix GOP sizes");
    const int64_t frames = plan.frame_count();
    if (static_cast<int64_t>(values[s].size()) != frames) {
      throw ConfigError("per_position_stats: sequence " + std::to_string(s) + " has " +
                        std::to_string(values[s].size()) + " values for " + std::to_string(frames) +
                        " planned frames");
    }
    for (const auto& e : plan.entries) {
      const bool gop_start = e.frame_index % gop == 0;
      if (gop_start != (e.kind == FrameKind::kIntra)) {
        throw ConfigError("per_position_stats: plan is inconsistent with its GOP size");
      }
    }
    for (int64_t start = 0; start + gop <= frames; start += gop) {
      for (int64_t k = 1; k < gop; ++k) {
        stats.mean[static_cast<size_t>(k - 1)] += values[s][static_cast<size_t>(start + k)];
        ++stats.count[static_cast<size_t>(k - 1)];
      }
    }
  }
  for (size_t k = 0; k < stats.mean.size(); ++k) {
    if (stats.count[k] > 0) stats.mean[k] /= static_cast<double>(stats.count[k]);
  }
  return stats;
}

}  // namespace plvc
