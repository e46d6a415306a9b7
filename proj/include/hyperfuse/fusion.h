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

// HSI/MSI fusion for spatial super-resolution.
//
// The low-resolution HSI is split into a per-pixel intensity (L2 norm of the
// spectrum) and unit-norm spectral signatures. The intensity plane is
// concatenated with the MSI resampled onto the same grid; an LSTM reads a
// window of that stack at several scales, largest first, and predicts the
// intensity of the window. Predicted intensity is upsampled to the
// high-resolution grid and multiplied back into the (nearest-neighbour
// upsampled) signatures.

#ifndef HYPERFUSE_FUSION_H_
#define HYPERFUSE_FUSION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hyperfuse/datacube.h"
#include "hyperfuse/image.h"
#include "hyperfuse/lstm.h"
#include "hyperfuse/metrics.h"
#include "hyperfuse/simulate.h"

namespace hyperfuse::fusion {

// Pixels whose spectral norm is at or below this get the uniform signature
// 1/sqrt(bands). Any non-zero float spectrum has a norm above it, so
// intensity * signature reconstructs every pixel.
inline constexpr double kZeroIntensity = 0.0;

struct SpectralDecomposition {
  Image intensity;       // rows x cols, per-pixel L2 norm
  HyperCube signatures;  // rows x cols x bands, unit-norm spectra
};

SpectralDecomposition decompose(const HyperCube& hsi);

// Elementwise intensity * signatures, i.e. the inverse of decompose().
HyperCube multiply(const Image& intensity, const HyperCube& signatures);

// Band 0: intensity of hsi_lo. Bands 1..: the MSI resampled onto the hsi_lo
// grid with quintic_downsample_msi(msi, factor).
HyperCube build_input_stack(const HyperCube& hsi_lo, const HyperCube& msi, std::size_t factor);

struct PatchSetSpec {
  std::string name = "lambda3";
  std::vector<std::size_t> sizes = {8, 6, 4, 2};
  double train_fraction = 0.8;
  // Number of training windows; when unset, train_fraction of all grid
  // positions.
  std::optional<std::size_t> count;

  std::size_t canonical() const { return sizes.front(); }
  void validate() const;
};

// {16,14,12,10}, {12,10,8,6}, {8,6,4,2}.
PatchSetSpec lambda_set(int which);
// "lambda1".."lambda3" or an explicit list such as "16,14,12,10".
PatchSetSpec parse_patch_set(const std::string& text);

struct PatchSample {
  std::size_t center_row = 0;
  std::size_t center_col = 0;
  // One frame per patch size, largest first; each frame is canonical^2 *
  // stack bands values, band-major then row-major.
  std::vector<lstm::Vector> sequence;
  lstm::Vector target;  // canonical^2 values, row-major
};

struct PatchSet {
  std::string name;
  std::vector<std::size_t> sizes;
  double train_fraction = 0.8;
  std::size_t canonical = 0;
  std::size_t stack_bands = 0;
  std::vector<PatchSample> samples;

  std::size_t input_width() const { return canonical * canonical * stack_bands; }
  std::size_t output_width() const { return canonical * canonical; }
};

// Per-band divisor applied to the stack before it reaches the LSTM (max |v|
// of the band, 1 for an all-zero band). Band 0's divisor also scales the
// intensity target and prediction.
std::vector<double> stack_scales(const HyperCube& stack);

// Top-left corner of the size x size window centred on `center`, shifted to
// lie inside [0, extent).
std::size_t window_origin(std::size_t center, std::size_t size, std::size_t extent);

// Stack bands divided by stack_scales().
std::vector<Image> scaled_planes(const HyperCube& stack);

// The multi-scale sequence of the window family centred at (row, col), each
// window resized to sizes.front() squared.
std::vector<lstm::Vector> window_sequence(const std::vector<Image>& planes,
                                          const std::vector<std::size_t>& sizes, std::size_t row,
                                          std::size_t col);

// Draws `count` distinct centres uniformly at random (seeded). For each one
// the sequence holds every window size rescaled (bilinear) to the canonical
// size, largest first; the target is the canonical window of
// target_intensity. target_intensity must be on the stack grid.
PatchSet extract_patches(const HyperCube& stack, const Image& target_intensity,
                         const std::vector<std::size_t>& sizes, std::size_t count,
                         std::uint64_t seed, const std::string& name = "custom",
                         double train_fraction = 0.8);

// Low-grid plane Z minimising || bilinear upsample of Z by factor - intensity_hi ||^2,
// i.e. the intensity the LSTM should emit so that enhance() reproduces the
// high-resolution intensity as closely as bilinear upsampling allows.
Image coarse_target(const Image& intensity_hi, std::size_t factor);

struct FusionConfig {
  PatchSetSpec patch_set;
  std::size_t epochs = 400;
  double learning_rate = 0.5;
  std::size_t hidden_units = 8;
  std::uint64_t seed = 0;
  std::size_t decimation_factor = 4;
  simulate::DecimationMode decimation = simulate::DecimationMode::kMean;
  std::vector<simulate::BandRange> msi_ranges = simulate::default_msi_ranges();
  std::optional<double> clip_norm;  // global gradient-norm clipping, off by default
  metrics::SsimConfig ssim;

  void validate() const;
};

struct TrainResult {
  lstm::LstmParams params;
  std::vector<double> loss_history;  // mean loss at the start of each epoch
};

// Full-batch gradient descent on the mean squared error between the LSTM's
// final output and each sample's target.
TrainResult train(const PatchSet& patches, const FusionConfig& cfg);

// Tiles the stack grid with canonical windows (the last row/column of tiles
// is shifted inward to fit), predicts each window's intensity and upsamples
// the assembled plane by `factor` with bilinear interpolation. Windows are
// evaluated in parallel; enhance_serial is the single-threaded reference.
Image enhance(const HyperCube& stack, const lstm::LstmParams& params,
              const std::vector<std::size_t>& sizes, std::size_t factor);
Image enhance_serial(const HyperCube& stack, const lstm::LstmParams& params,
                     const std::vector<std::size_t>& sizes, std::size_t factor);

// Nearest-neighbour upsampled signatures times the high-resolution intensity.
HyperCube recompose(const Image& intensity_hi, const HyperCube& signatures_lo,
                    std::size_t factor);

struct FusionResult {
  HyperCube fused;
  HyperCube reference;  // reference cropped to the fused dims
  HyperCube hsi_lo;
  HyperCube msi;
  TrainResult training;
  metrics::QualityReport report;
  metrics::QualityReport baseline;  // nearest-neighbour upsampled hsi_lo
  std::size_t patch_count = 0;
};

FusionResult fuse_pipeline(const HyperCube& reference, const FusionConfig& cfg);

}  // namespace hyperfuse::fusion

#endif  // HYPERFUSE_FUSION_H_
