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

// Simulated sensor inputs derived from a reference cube: a spatially
// decimated hyperspectral cube and a band-averaged multispectral image.

#ifndef HYPERFUSE_SIMULATE_H_
#define HYPERFUSE_SIMULATE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/datacube.h"

namespace hyperfuse::simulate {

struct BandRange {
  std::string name;
  double lo_nm = 0;
  double hi_nm = 0;

  bool contains(double w) const { return lo_nm <= w && w <= hi_nm; }
};

// Blue 445-516, Green 506-595, Red 632-698, NIR 757-853 (nm).
std::vector<BandRange> default_msi_ranges();

// "blue=445:516,green=506:595" -> ranges. Throws InvalidArgument.
std::vector<BandRange> parse_ranges(const std::string& spec);

enum class DecimationMode { kMean, kSubsample };

struct SimulationSpec {
  std::size_t decimation_factor = 4;
  DecimationMode mode = DecimationMode::kMean;
  std::vector<BandRange> msi_ranges = default_msi_ranges();

  void validate() const;
};

// Block-mean (or top-left subsample) reduction by `factor`; trailing rows and
// columns that do not fill a block are dropped. Bands run in parallel.
HyperCube decimate(const HyperCube& cube, std::size_t factor,
                   DecimationMode mode = DecimationMode::kMean);
// Single-threaded reference for decimate(); bit-identical output.
HyperCube decimate_serial(const HyperCube& cube, std::size_t factor,
                          DecimationMode mode = DecimationMode::kMean);

// Output band k = per-pixel mean of the input bands whose centre wavelength
// lies in ranges[k] (both ends inclusive).
HyperCube synthesize_msi(const HyperCube& cube, const std::vector<BandRange>& ranges);

// Degree-5 Lagrange resampling of each band onto the factor-decimated grid,
// evaluated at the centres of the decimation blocks. Reproduces polynomials
// of degree <= 5 in each axis exactly.
HyperCube quintic_downsample_msi(const HyperCube& msi, std::size_t factor = 4);

// Weights of the 6-tap degree-5 interpolant at fine coordinate `pos` over
// the nodes start..start+5.
struct QuinticStencil {
  std::size_t start;
  double w[6];
};
QuinticStencil quintic_stencil(double pos, std::size_t n);

// Smooth test scene: a handful of isotropic Gaussian "materials", each with
// its own per-band amplitude, plus a small floor. Gaussian widths are drawn
// from [sigma_lo, sigma_hi] pixels (scaled by min(rows, cols) / 32).
// Wavelengths span 450-850 nm.
HyperCube synthetic_smooth_cube(std::size_t rows, std::size_t cols, std::size_t bands,
                                std::uint64_t seed, double sigma_lo = 2.5,
                                double sigma_hi = 5.0);

}  // namespace hyperfuse::simulate

#endif  // HYPERFUSE_SIMULATE_H_
