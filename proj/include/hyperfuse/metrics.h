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

#ifndef HYPERFUSE_METRICS_H_
#define HYPERFUSE_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperfuse/datacube.h"
#include "hyperfuse/image.h"

namespace hyperfuse::metrics {

enum class SsimMode { kGlobal, kWindowedMean };

// Where evaluate_cube takes L (SSIM dynamic range) from.
enum class RangePolicy {
  kFixed,           // use SsimConfig::L for every band
  kReferenceBand,   // max - min of the reference band (1 if the band is flat)
};

struct SsimConfig {
  double k1 = 0.01;
  double k2 = 0.03;
  double L = 1.0;
  std::size_t window = 8;
  SsimMode mode = SsimMode::kGlobal;
  RangePolicy range = RangePolicy::kReferenceBand;

  void validate() const;
};

// Population moments, c1 = (k1 L)^2, c2 = (k2 L)^2. Windowed mode averages
// the index over non-overlapping window x window tiles; partial edge tiles
// are dropped.
double ssim(const Image& x, const Image& y, const SsimConfig& cfg);

// 10 log10(R^2 / MSE); +infinity when the images are identical.
double psnr(const Image& x, const Image& y, double peak);

struct QualityReport {
  std::vector<double> ssim;
  std::vector<double> psnr;
  double mean_ssim = 0;
  double mean_psnr = 0;
  double std_ssim = 0;  // sample (N-1) standard deviation across bands
  double std_psnr = 0;

  std::size_t bands() const { return ssim.size(); }
};

// Mean and sample standard deviation; infinities propagate to the mean and
// give std 0 when every entry is infinite, +inf when only some are.
void summarize(const std::vector<double>& values, double& mean, double& std_dev);

// Per-band SSIM and PSNR (R = per-band max of the reference). Bands are
// evaluated in parallel; evaluate_cube_serial is the single-threaded
// reference and produces bit-identical reports.
QualityReport evaluate_cube(const HyperCube& fused, const HyperCube& reference,
                            const SsimConfig& cfg);
QualityReport evaluate_cube_serial(const HyperCube& fused, const HyperCube& reference,
                                   const SsimConfig& cfg);

// `band,ssim,psnr` rows followed by a `mean` row.
std::string format_report_csv(const QualityReport& report);
void write_report_csv(const QualityReport& report, const std::filesystem::path& path);

std::string format_number(double v);

}  // namespace hyperfuse::metrics

#endif  // HYPERFUSE_METRICS_H_
