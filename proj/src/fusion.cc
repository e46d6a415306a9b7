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

#include "hyperfuse/fusion.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hyperfuse/error.h"
#include "hyperfuse/resample.h"
#include "hyperfuse/rng.h"

namespace hyperfuse::fusion {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kPatchStream = 2;

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "empty patch size list");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 2) throw Error(ErrorCode::kInvalidArgument, "patch sizes must be >= 2");
    if (k > 0 && sizes[k] >= sizes[k - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "patch sizes must be strictly decreasing");
    }
  }
}

std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t size) {
  std::vector<std::size_t> origins;
  for (std::size_t o = 0; o + size < extent; o += size) origins.push_back(o);
  origins.push_back(extent - size);
  return origins;
}

void check_enhance_inputs(const HyperCube& stack, const lstm::LstmParams& params,
                          const std::vector<std::size_t>& sizes, std::size_t factor) {
  check_sizes(sizes);
  if (factor < 1) throw Error(ErrorCode::kInvalidFactor, "factor must be >= 1");
  if (params.all_zero()) {
    throw Error(ErrorCode::kUntrainedParams, "all LSTM parameters are zero");
  }
  const std::size_t s = sizes.front();
  if (s > std::min(stack.rows(), stack.cols())) {
    throw Error(ErrorCode::kSizeTooLarge,
                "window " + std::to_string(s) + " exceeds stack " + dims(stack.rows(), stack.cols()));
  }
  if (params.input() != s * s * stack.bands() || params.output() != s * s) {
    throw Error(ErrorCode::kShapeMismatch,
                "params expect input " + std::to_string(params.input()) + "/output " +
                    std::to_string(params.output()) + ", windows give " +
                    std::to_string(s * s * stack.bands()) + "/" + std::to_string(s * s));
  }
}

struct Tile {
  std::size_t top;
  std::size_t left;
};

std::vector<Tile> tiles_for(const HyperCube& stack, std::size_t s) {
  std::vector<Tile> tiles;
  for (std::size_t top : tile_origins(stack.rows(), s)) {
    for (std::size_t left : tile_origins(stack.cols(), s)) tiles.push_back({top, left});
  }
  return tiles;
}

lstm::Vector predict_tile(const std::vector<Image>& planes, const lstm::LstmParams& params,
                          const std::vector<std::size_t>& sizes, const Tile& t) {
  const std::size_t s = sizes.front();
  return lstm::predict(params, window_sequence(planes, sizes, t.top + s / 2, t.left + s / 2));
}

Image assemble(const HyperCube& stack, const std::vector<Tile>& tiles,
               const std::vector<lstm::Vector>& predictions, std::size_t s, double scale,
               std::size_t factor) {
  Image plane(stack.rows(), stack.cols());
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        plane.at(tiles[k].top + r, tiles[k].left + c) =
            predictions[k][static_cast<Eigen::Index>(r * s + c)] * scale;
      }
    }
  }
  return resize_bilinear(plane, plane.rows * factor, plane.cols * factor);
}

}  // namespace

SpectralDecomposition decompose(const HyperCube& hsi) {
  if (hsi.bands() == 0 || hsi.pixels() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot decompose an empty cube");
  }
  SpectralDecomposition out{Image(hsi.rows(), hsi.cols()),
                            HyperCube(hsi.rows(), hsi.cols(), hsi.bands(), hsi.wavelengths_nm(),
                                      hsi.name())};
  const float uniform = static_cast<float>(1.0 / std::sqrt(static_cast<double>(hsi.bands())));
  const std::size_t n = hsi.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    double ss = 0;
    for (std::size_t b = 0; b < hsi.bands(); ++b) {
      const double v = hsi.plane(b)[p];
      ss += v * v;
    }
    const double norm = std::sqrt(ss);
    out.intensity.data[p] = norm;
    for (std::size_t b = 0; b < hsi.bands(); ++b) {
      out.signatures.mutable_plane(b)[p] =
          norm > kZeroIntensity ? static_cast<float>(hsi.plane(b)[p] / norm) : uniform;
    }
  }
  return out;
}

HyperCube multiply(const Image& intensity, const HyperCube& signatures) {
  if (intensity.rows != signatures.rows() || intensity.cols != signatures.cols()) {
    throw Error(ErrorCode::kDimMismatch, "intensity " + dims(intensity.rows, intensity.cols) +
                                             " vs signatures " +
                                             dims(signatures.rows(), signatures.cols()));
  }
  HyperCube out(signatures.rows(), signatures.cols(), signatures.bands(),
                signatures.wavelengths_nm(), signatures.name());
  for (std::size_t b = 0; b < signatures.bands(); ++b) {
    auto src = signatures.plane(b);
    auto dst = out.mutable_plane(b);
    for (std::size_t p = 0; p < src.size(); ++p) {
      dst[p] = static_cast<float>(intensity.data[p] * static_cast<double>(src[p]));
    }
  }
  return out;
}

HyperCube build_input_stack(const HyperCube& hsi_lo, const HyperCube& msi, std::size_t factor) {
  HyperCube msi_lo = simulate::quintic_downsample_msi(msi, factor);
  if (msi_lo.rows() != hsi_lo.rows() || msi_lo.cols() != hsi_lo.cols()) {
    throw Error(ErrorCode::kDimMismatch, "low-res HSI " + dims(hsi_lo.rows(), hsi_lo.cols()) +
                                             " vs resampled MSI " +
                                             dims(msi_lo.rows(), msi_lo.cols()));
  }
  Image intensity = decompose(hsi_lo).intensity;
  HyperCube stack(hsi_lo.rows(), hsi_lo.cols(), 1 + msi_lo.bands(), {}, hsi_lo.name());
  auto first = stack.mutable_plane(0);
  for (std::size_t p = 0; p < first.size(); ++p) first[p] = static_cast<float>(intensity.data[p]);
  for (std::size_t b = 0; b < msi_lo.bands(); ++b) {
    auto src = msi_lo.plane(b);
    std::copy(src.begin(), src.end(), stack.mutable_plane(b + 1).begin());
  }
  return stack;
}

void PatchSetSpec::validate() const {
  check_sizes(sizes);
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1]");
  }
  if (count && *count == 0) throw Error(ErrorCode::kInvalidArgument, "patch count must be >= 1");
}

PatchSetSpec lambda_set(int which) {
  PatchSetSpec spec;
  switch (which) {
    case 1: spec.sizes = {16, 14, 12, 10}; break;
    case 2: spec.sizes = {12, 10, 8, 6}; break;
    case 3: spec.sizes = {8, 6, 4, 2}; break;
    default: throw Error(ErrorCode::kInvalidArgument, "unknown patch family " + std::to_string(which));
  }
  spec.name = "lambda" + std::to_string(which);
  return spec;
}

PatchSetSpec parse_patch_set(const std::string& text) {
  if (text == "lambda1" || text == "lambda2" || text == "lambda3") {
    return lambda_set(text.back() - '0');
  }
  PatchSetSpec spec;
  spec.name = "custom";
  spec.sizes.clear();
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::size_t v = 0;
    auto res = std::from_chars(text.data() + pos, text.data() + comma, v);
    if (res.ec != std::errc() || res.ptr != text.data() + comma) {
      throw Error(ErrorCode::kInvalidArgument, "bad patch size list '" + text + "'");
    }
    spec.sizes.push_back(v);
    pos = comma + 1;
  }
  spec.validate();
  for (int k = 1; k <= 3; ++k) {
    if (lambda_set(k).sizes == spec.sizes) spec.name = lambda_set(k).name;
  }
  return spec;
}

std::vector<double> stack_scales(const HyperCube& stack) {
  std::vector<double> scales(stack.bands(), 1.0);
  for (std::size_t b = 0; b < stack.bands(); ++b) {
    double m = 0;
    for (float v : stack.plane(b)) m = std::max(m, std::fabs(static_cast<double>(v)));
    if (m > 0) scales[b] = m;
  }
  return scales;
}

std::vector<Image> scaled_planes(const HyperCube& stack) {
  auto scales = stack_scales(stack);
  std::vector<Image> planes;
  planes.reserve(stack.bands());
  for (std::size_t b = 0; b < stack.bands(); ++b) {
    Image img = band(stack, b);
    for (double& v : img.data) v /= scales[b];
    planes.push_back(std::move(img));
  }
  return planes;
}

std::size_t window_origin(std::size_t center, std::size_t size, std::size_t extent) {
  const std::size_t half = size / 2;
  const std::size_t top = center >= half ? center - half : 0;
  return std::min(top, extent - size);
}

std::vector<lstm::Vector> window_sequence(const std::vector<Image>& planes,
                                          const std::vector<std::size_t>& sizes, std::size_t row,
                                          std::size_t col) {
  const std::size_t s = sizes.front();
  const std::size_t frame = s * s;
  std::vector<lstm::Vector> seq;
  seq.reserve(sizes.size());
  for (std::size_t size : sizes) {
    lstm::Vector x(static_cast<Eigen::Index>(frame * planes.size()));
    for (std::size_t b = 0; b < planes.size(); ++b) {
      const Image& p = planes[b];
      const std::size_t top = window_origin(row, size, p.rows);
      const std::size_t left = window_origin(col, size, p.cols);
      Image w = resize_window_bilinear(p, top, left, size, size, s, s);
      std::copy(w.data.begin(), w.data.end(), x.data() + b * frame);
    }
    seq.push_back(std::move(x));
  }
  return seq;
}

PatchSet extract_patches(const HyperCube& stack, const Image& target_intensity,
                         const std::vector<std::size_t>& sizes, std::size_t count,
                         std::uint64_t seed, const std::string& name, double train_fraction) {
  check_sizes(sizes);
  const std::size_t s = sizes.front();
  if (s > std::min(stack.rows(), stack.cols())) {
    throw Error(ErrorCode::kSizeTooLarge,
                "patch size " + std::to_string(s) + " exceeds grid " + dims(stack.rows(), stack.cols()));
  }
  if (target_intensity.rows != stack.rows() || target_intensity.cols != stack.cols()) {
    throw Error(ErrorCode::kDimMismatch, "target " + dims(target_intensity.rows, target_intensity.cols) +
                                             " vs stack " + dims(stack.rows(), stack.cols()));
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "patch count must be >= 1");
  const std::size_t positions = stack.rows() * stack.cols();
  if (count > positions) {
    throw Error(ErrorCode::kCountTooLarge, "requested " + std::to_string(count) +
                                               " patches but the grid has only " +
                                               std::to_string(positions) + " positions");
  }

  std::vector<std::size_t> order(positions);
  for (std::size_t k = 0; k < positions; ++k) order[k] = k;
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);

  const auto scales = stack_scales(stack);
  const auto planes = scaled_planes(stack);
  PatchSet set;
  set.name = name;
  set.sizes = sizes;
  set.train_fraction = train_fraction;
  set.canonical = s;
  set.stack_bands = stack.bands();
  set.samples.reserve(count);
  for (std::size_t pos : order) {
    PatchSample sample;
    sample.center_row = pos / stack.cols();
    sample.center_col = pos % stack.cols();
    sample.sequence = window_sequence(planes, sizes, sample.center_row, sample.center_col);
    const std::size_t top = window_origin(sample.center_row, s, stack.rows());
    const std::size_t left = window_origin(sample.center_col, s, stack.cols());
    sample.target.resize(static_cast<Eigen::Index>(s * s));
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        sample.target[static_cast<Eigen::Index>(r * s + c)] =
            target_intensity.at(top + r, left + c) / scales[0];
      }
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

Image coarse_target(const Image& intensity_hi, std::size_t factor) {
  if (factor < 1 || intensity_hi.rows % factor != 0 || intensity_hi.cols % factor != 0 ||
      intensity_hi.empty()) {
    throw Error(ErrorCode::kDimMismatch, "intensity " + dims(intensity_hi.rows, intensity_hi.cols) +
                                             " is not a multiple of factor " +
                                             std::to_string(factor));
  }
  const std::size_t rows = intensity_hi.rows / factor;
  const std::size_t cols = intensity_hi.cols / factor;
  auto interp_matrix = [](std::size_t n_in, std::size_t n_out) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_out),
                                              static_cast<Eigen::Index>(n_in));
    auto taps = linear_taps(n_in, n_out);
    for (std::size_t u = 0; u < n_out; ++u) {
      a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(taps[u].lo)) += 1.0 - taps[u].w;
      a(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(taps[u].hi)) += taps[u].w;
    }
    return a;
  };
  const Eigen::MatrixXd ar = interp_matrix(rows, intensity_hi.rows);
  const Eigen::MatrixXd ac = interp_matrix(cols, intensity_hi.cols);
  Eigen::MatrixXd hi(static_cast<Eigen::Index>(intensity_hi.rows),
                     static_cast<Eigen::Index>(intensity_hi.cols));
  for (std::size_t r = 0; r < intensity_hi.rows; ++r) {
    for (std::size_t c = 0; c < intensity_hi.cols; ++c) {
      hi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = intensity_hi.at(r, c);
    }
  }
  // Z = (Ar' Ar)^-1 Ar' I Ac (Ac' Ac)^-1
  const Eigen::MatrixXd left = (ar.transpose() * ar).ldlt().solve(ar.transpose() * hi);
  const Eigen::MatrixXd z =
      (ac.transpose() * ac).ldlt().solve((left * ac).transpose()).transpose();
  Image out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.at(r, c) = z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

void FusionConfig::validate() const {
  patch_set.validate();
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }
  if (hidden_units < 1) throw Error(ErrorCode::kInvalidArgument, "hidden units must be >= 1");
  if (decimation_factor < 2) throw Error(ErrorCode::kInvalidFactor, "factor must be >= 2");
  if (clip_norm && !(*clip_norm > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip norm must be > 0");
  }
  ssim.validate();
}

TrainResult train(const PatchSet& patches, const FusionConfig& cfg) {
  if (patches.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty patch set");
  cfg.validate();
  const std::size_t in = patches.input_width();
  const std::size_t out = patches.output_width();
  TrainResult result;
  result.params = lstm::init_params(cfg.hidden_units, in, out, Rng::derive(cfg.seed, kInitStream));
  result.loss_history.reserve(cfg.epochs);

  const double n = static_cast<double>(patches.samples.size());
  const double p = static_cast<double>(out);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    lstm::LstmParams grads(cfg.hidden_units, in, out);
    double loss = 0;
    for (const PatchSample& s : patches.samples) {
      auto fwd = lstm::forward(result.params, s.sequence);
      const lstm::Vector diff = fwd.output - s.target;
      loss += diff.squaredNorm() / p;
      lstm::accumulate_backward(result.params, fwd.cache, (2.0 / (p * n)) * diff, grads);
    }
    loss /= n;
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergenceDetected, "loss is not finite at epoch " +
                                                      std::to_string(epoch));
    }
    result.loss_history.push_back(loss);
    if (cfg.clip_norm) lstm::clip_global_norm(grads, *cfg.clip_norm);
    result.params = lstm::sgd_update(result.params, grads, cfg.learning_rate);
    if (!result.params.all_finite()) {
      throw Error(ErrorCode::kDivergenceDetected, "parameters became non-finite at epoch " +
                                                      std::to_string(epoch));
    }
  }
  return result;
}

Image enhance_serial(const HyperCube& stack, const lstm::LstmParams& params,
                     const std::vector<std::size_t>& sizes, std::size_t factor) {
  check_enhance_inputs(stack, params, sizes, factor);
  const std::size_t s = sizes.front();
  const auto planes = scaled_planes(stack);
  const auto tiles = tiles_for(stack, s);
  std::vector<lstm::Vector> predictions;
  predictions.reserve(tiles.size());
  for (const Tile& t : tiles) predictions.push_back(predict_tile(planes, params, sizes, t));
  return assemble(stack, tiles, predictions, s, stack_scales(stack)[0], factor);
}

Image enhance(const HyperCube& stack, const lstm::LstmParams& params,
              const std::vector<std::size_t>& sizes, std::size_t factor) {
  check_enhance_inputs(stack, params, sizes, factor);
  const std::size_t s = sizes.front();
  const auto planes = scaled_planes(stack);
  const auto tiles = tiles_for(stack, s);
  std::vector<lstm::Vector> predictions(tiles.size());
  const auto n = static_cast<std::int64_t>(tiles.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    predictions[static_cast<std::size_t>(k)] =
        predict_tile(planes, params, sizes, tiles[static_cast<std::size_t>(k)]);
  }
  // Overlapping edge tiles are pasted in a fixed order, so the result does
  // not depend on the thread count.
  return assemble(stack, tiles, predictions, s, stack_scales(stack)[0], factor);
}

HyperCube recompose(const Image& intensity_hi, const HyperCube& signatures_lo,
                    std::size_t factor) {
  if (factor < 1 || intensity_hi.rows != factor * signatures_lo.rows() ||
      intensity_hi.cols != factor * signatures_lo.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "intensity " + dims(intensity_hi.rows, intensity_hi.cols) + " is not " +
                    std::to_string(factor) + " x signatures " +
                    dims(signatures_lo.rows(), signatures_lo.cols()));
  }
  HyperCube out(intensity_hi.rows, intensity_hi.cols, signatures_lo.bands(),
                signatures_lo.wavelengths_nm(), signatures_lo.name());
  for (std::size_t b = 0; b < out.bands(); ++b) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) {
        out.at(r, c, b) = static_cast<float>(
            intensity_hi.at(r, c) * static_cast<double>(signatures_lo.at(r / factor, c / factor, b)));
      }
    }
  }
  return out;
}

FusionResult fuse_pipeline(const HyperCube& reference, const FusionConfig& cfg) {
  cfg.validate();
  const std::size_t f = cfg.decimation_factor;
  FusionResult res;
  res.hsi_lo = simulate::decimate(reference, f, cfg.decimation);
  res.msi = simulate::synthesize_msi(reference, cfg.msi_ranges);
  res.reference = crop(reference, res.hsi_lo.rows() * f, res.hsi_lo.cols() * f);

  SpectralDecomposition lo = decompose(res.hsi_lo);
  HyperCube stack = build_input_stack(res.hsi_lo, res.msi, f);
  Image target = coarse_target(decompose(res.reference).intensity, f);

  const auto& ps = cfg.patch_set;
  const std::size_t positions = stack.rows() * stack.cols();
  res.patch_count = ps.count.value_or(std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(ps.train_fraction * static_cast<double>(positions)))));
  PatchSet patches = extract_patches(stack, target, ps.sizes, res.patch_count,
                                     Rng::derive(cfg.seed, kPatchStream), ps.name,
                                     ps.train_fraction);

  res.training = train(patches, cfg);
  Image intensity = enhance(stack, res.training.params, ps.sizes, f);
  res.fused = recompose(intensity, lo.signatures, f);
  res.fused.set_name(reference.name().empty() ? "fused" : reference.name() + "-fused");

  res.report = metrics::evaluate_cube(res.fused, res.reference, cfg.ssim);
  res.baseline = metrics::evaluate_cube(upsample_nearest(res.hsi_lo, f), res.reference, cfg.ssim);
  return res;
}

}  // namespace hyperfuse::fusion
