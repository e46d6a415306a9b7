// Copyright (c) 2026 The Hyperfuse Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hyperfuse/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "hyperfuse/error.h"

namespace hyperfuse::metrics {

void SsimConfig::validate() const {
  if (!(k1 > 0) || !(k2 > 0)) throw Error(ErrorCode::kInvalidArgument, "k1, k2 must be > 0");
  if (!(L > 0)) throw Error(ErrorCode::kInvalidArgument, "L must be > 0");
  if (window < 2) throw Error(ErrorCode::kInvalidArgument, "window must be >= 2");
}

namespace {

void check_pair(const Image& x, const Image& y) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw Error(ErrorCode::kDimMismatch,
                std::to_string(x.rows) + "x" + std::to_string(x.cols) + " vs " +
                    std::to_string(y.rows) + "x" + std::to_string(y.cols));
  }
  if (x.empty()) throw Error(ErrorCode::kEmptyImage, "SSIM/PSNR of an empty image");
}

// SSIM of the h x w window at (top, left); two-pass population moments.
double ssim_window(const Image& x, const Image& y, std::size_t top, std::size_t left,
                   std::size_t h, std::size_t w, double c1, double c2) {
  const double n = static_cast<double>(h * w);
  double sx = 0, sy = 0;
  for (std::size_t r = top; r < top + h; ++r) {
    for (std::size_t c = left; c < left + w; ++c) {
      sx += x.at(r, c);
      sy += y.at(r, c);
    }
  }
  const double mx = sx / n;
  const double my = sy / n;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t r = top; r < top + h; ++r) {
    for (std::size_t c = left; c < left + w; ++c) {
      const double dx = x.at(r, c) - mx;
      const double dy = y.at(r, c) - my;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  return ((2 * mx * my + c1) * (2 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double band_range(std::span<const float> plane) {
  auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
  double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  return range > 0 ? range : 1.0;
}

double band_peak(std::span<const float> plane) {
  double peak = *std::max_element(plane.begin(), plane.end());
  if (peak > 0) return peak;
  double abs_peak = 0;
  for (float v : plane) abs_peak = std::max(abs_peak, std::fabs(static_cast<double>(v)));
  return abs_peak > 0 ? abs_peak : 1.0;
}

void evaluate_band(const HyperCube& fused, const HyperCube& reference, const SsimConfig& cfg,
                   std::size_t b, QualityReport& report) {
  Image x = band(fused, b);
  Image y = band(reference, b);
  SsimConfig band_cfg = cfg;
  if (cfg.range == RangePolicy::kReferenceBand) band_cfg.L = band_range(reference.plane(b));
  report.ssim[b] = ssim(x, y, band_cfg);
  report.psnr[b] = psnr(x, y, band_peak(reference.plane(b)));
}

void check_cubes(const HyperCube& fused, const HyperCube& reference) {
  if (fused.rows() != reference.rows() || fused.cols() != reference.cols() ||
      fused.bands() != reference.bands()) {
    throw Error(ErrorCode::kDimMismatch,
                "fused " + std::to_string(fused.rows()) + "x" + std::to_string(fused.cols()) +
                    "x" + std::to_string(fused.bands()) + " vs reference " +
                    std::to_string(reference.rows()) + "x" + std::to_string(reference.cols()) +
                    "x" + std::to_string(reference.bands()));
  }
}

void finish(QualityReport& report) {
  summarize(report.ssim, report.mean_ssim, report.std_ssim);
  summarize(report.psnr, report.mean_psnr, report.std_psnr);
}

}  // namespace

double ssim(const Image& x, const Image& y, const SsimConfig& cfg) {
  check_pair(x, y);
  cfg.validate();
  const double c1 = (cfg.k1 * cfg.L) * (cfg.k1 * cfg.L);
  const double c2 = (cfg.k2 * cfg.L) * (cfg.k2 * cfg.L);
  if (cfg.mode == SsimMode::kGlobal) return ssim_window(x, y, 0, 0, x.rows, x.cols, c1, c2);

  const std::size_t tiles_r = x.rows / cfg.window;
  const std::size_t tiles_c = x.cols / cfg.window;
  if (tiles_r == 0 || tiles_c == 0) {
    throw Error(ErrorCode::kEmptyImage, "image smaller than the SSIM window");
  }
  double sum = 0;
  for (std::size_t i = 0; i < tiles_r; ++i) {
    for (std::size_t j = 0; j < tiles_c; ++j) {
      sum += ssim_window(x, y, i * cfg.window, j * cfg.window, cfg.window, cfg.window, c1, c2);
    }
  }
  return sum / static_cast<double>(tiles_r * tiles_c);
}

double psnr(const Image& x, const Image& y, double peak) {
  check_pair(x, y);
  if (!(peak > 0)) throw Error(ErrorCode::kInvalidArgument, "PSNR peak must be > 0");
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data[i] - y.data[i];
    sse += d * d;
  }
  if (sse == 0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(x.size());
  return 10.0 * std::log10(peak * peak / mse);
}

void summarize(const std::vector<double>& values, double& mean, double& std_dev) {
  mean = 0;
  std_dev = 0;
  if (values.empty()) return;
  std::size_t infinite = 0;
  double sum = 0;
  for (double v : values) {
    if (std::isinf(v)) {
      ++infinite;
    } else {
      sum += v;
    }
  }
  if (infinite > 0) {
    mean = std::numeric_limits<double>::infinity();
    std_dev = infinite == values.size() ? 0.0 : std::numeric_limits<double>::infinity();
    return;
  }
  const double n = static_cast<double>(values.size());
  mean = sum / n;
  if (values.size() < 2) return;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  std_dev = std::sqrt(ss / (n - 1));
}

QualityReport evaluate_cube_serial(const HyperCube& fused, const HyperCube& reference,
                                   const SsimConfig& cfg) {
  check_cubes(fused, reference);
  cfg.validate();
  QualityReport report;
  report.ssim.resize(fused.bands());
  report.psnr.resize(fused.bands());
  for (std::size_t b = 0; b < fused.bands(); ++b) evaluate_band(fused, reference, cfg, b, report);
  finish(report);
  return report;
}

QualityReport evaluate_cube(const HyperCube& fused, const HyperCube& reference,
                            const SsimConfig& cfg) {
  check_cubes(fused, reference);
  cfg.validate();
  QualityReport report;
  report.ssim.resize(fused.bands());
  report.psnr.resize(fused.bands());
  const auto bands = static_cast<std::int64_t>(fused.bands());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < bands; ++b) {
    evaluate_band(fused, reference, cfg, static_cast<std::size_t>(b), report);
  }
  finish(report);
  return report;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_report_csv(const QualityReport& report) {
  std::ostringstream os;
  os << "band,ssim,psnr\n";
  for (std::size_t b = 0; b < report.bands(); ++b) {
    os << b << "," << format_number(report.ssim[b]) << "," << format_number(report.psnr[b])
       << "\n";
  }
  os << "mean," << format_number(report.mean_ssim) << "," << format_number(report.mean_psnr)
     << "\n";
  return os.str();
}

void write_report_csv(const QualityReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out << format_report_csv(report);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace hyperfuse::metrics
