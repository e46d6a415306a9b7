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

#include "hyperfuse/simulate.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"

namespace hyperfuse::simulate {

std::vector<BandRange> default_msi_ranges() {
  return {{"blue", 445, 516}, {"green", 506, 595}, {"red", 632, 698}, {"nir", 757, 853}};
}

std::vector<BandRange> parse_ranges(const std::string& spec) {
  std::vector<BandRange> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    std::string item = spec.substr(pos, comma - pos);
    auto eq = item.find('=');
    auto colon = item.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kInvalidArgument, "bad range '" + item + "', want name=lo:hi");
    }
    BandRange r{item.substr(0, eq), 0, 0};
    auto parse = [&](std::size_t b, std::size_t e, double& v) {
      auto res = std::from_chars(item.data() + b, item.data() + e, v);
      if (res.ec != std::errc() || res.ptr != item.data() + e) {
        throw Error(ErrorCode::kInvalidArgument, "bad number in range '" + item + "'");
      }
    };
    parse(eq + 1, colon, r.lo_nm);
    parse(colon + 1, item.size(), r.hi_nm);
    if (!(r.lo_nm < r.hi_nm)) {
      throw Error(ErrorCode::kInvalidArgument, "range '" + r.name + "' needs lo < hi");
    }
    out.push_back(std::move(r));
    pos = comma + 1;
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty range list");
  return out;
}

void SimulationSpec::validate() const {
  if (decimation_factor < 2) {
    throw Error(ErrorCode::kInvalidFactor, "decimation factor must be >= 2");
  }
  if (msi_ranges.empty()) throw Error(ErrorCode::kInvalidArgument, "no MSI ranges");
  for (const auto& r : msi_ranges) {
    if (!(r.lo_nm < r.hi_nm)) {
      throw Error(ErrorCode::kInvalidArgument, "degenerate range '" + r.name + "'");
    }
  }
}

namespace {

void check_factor(const HyperCube& cube, std::size_t factor) {
  if (factor < 2) throw Error(ErrorCode::kInvalidFactor, "factor must be >= 2");
  if (cube.rows() < factor || cube.cols() < factor) {
    throw Error(ErrorCode::kFactorTooLarge,
                "factor " + std::to_string(factor) + " exceeds cube dims " +
                    std::to_string(cube.rows()) + "x" + std::to_string(cube.cols()));
  }
}

void decimate_band(const HyperCube& cube, std::size_t factor, DecimationMode mode,
                   std::size_t b, HyperCube& out) {
  const double inv_area = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      if (mode == DecimationMode::kSubsample) {
        out.at(r, c, b) = cube.at(r * factor, c * factor, b);
        continue;
      }
      double sum = 0.0;
      for (std::size_t dr = 0; dr < factor; ++dr) {
        for (std::size_t dc = 0; dc < factor; ++dc) {
          sum += cube.at(r * factor + dr, c * factor + dc, b);
        }
      }
      out.at(r, c, b) = static_cast<float>(sum * inv_area);
    }
  }
}

}  // namespace

HyperCube decimate_serial(const HyperCube& cube, std::size_t factor, DecimationMode mode) {
  check_factor(cube, factor);
  HyperCube out(cube.rows() / factor, cube.cols() / factor, cube.bands(),
                cube.wavelengths_nm(), cube.name());
  for (std::size_t b = 0; b < cube.bands(); ++b) decimate_band(cube, factor, mode, b, out);
  return out;
}

HyperCube decimate(const HyperCube& cube, std::size_t factor, DecimationMode mode) {
  check_factor(cube, factor);
  HyperCube out(cube.rows() / factor, cube.cols() / factor, cube.bands(),
                cube.wavelengths_nm(), cube.name());
  const auto bands = static_cast<std::int64_t>(cube.bands());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < bands; ++b) {
    decimate_band(cube, factor, mode, static_cast<std::size_t>(b), out);
  }
  return out;
}

HyperCube synthesize_msi(const HyperCube& cube, const std::vector<BandRange>& ranges) {
  if (cube.wavelengths_nm().empty()) {
    throw Error(ErrorCode::kNoWavelengths, "cube '" + cube.name() + "' has no wavelengths");
  }
  if (ranges.empty()) throw Error(ErrorCode::kInvalidArgument, "no MSI ranges");
  const auto& wl = cube.wavelengths_nm();

  std::vector<std::vector<std::size_t>> members(ranges.size());
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    for (std::size_t b = 0; b < wl.size(); ++b) {
      if (ranges[k].contains(wl[b])) members[k].push_back(b);
    }
    if (members[k].empty()) {
      throw Error(ErrorCode::kEmptyRange, "range '" + ranges[k].name + "' contains no band");
    }
  }

  std::vector<double> mids;
  for (const auto& r : ranges) mids.push_back(0.5 * (r.lo_nm + r.hi_nm));
  // Midpoints only become wavelengths when they form a valid (increasing) axis.
  if (!std::is_sorted(mids.begin(), mids.end(), std::less_equal<>())) mids.clear();

  HyperCube out(cube.rows(), cube.cols(), ranges.size(), std::move(mids), cube.name());
  const std::size_t n = cube.pixels();
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    auto dst = out.mutable_plane(k);
    const double inv = 1.0 / static_cast<double>(members[k].size());
    for (std::size_t p = 0; p < n; ++p) {
      double sum = 0.0;
      for (std::size_t b : members[k]) sum += cube.plane(b)[p];
      dst[p] = static_cast<float>(sum * inv);
    }
  }
  return out;
}

QuinticStencil quintic_stencil(double pos, std::size_t n) {
  QuinticStencil s{};
  auto base = static_cast<std::int64_t>(std::floor(pos)) - 2;
  base = std::clamp<std::int64_t>(base, 0, static_cast<std::int64_t>(n) - 6);
  s.start = static_cast<std::size_t>(base);
  for (int k = 0; k < 6; ++k) {
    const double xk = static_cast<double>(base + k);
    double w = 1.0;
    for (int j = 0; j < 6; ++j) {
      if (j == k) continue;
      const double xj = static_cast<double>(base + j);
      w *= (pos - xj) / (xk - xj);
    }
    s.w[k] = w;
  }
  return s;
}

HyperCube quintic_downsample_msi(const HyperCube& msi, std::size_t factor) {
  if (factor < 2) throw Error(ErrorCode::kInvalidFactor, "factor must be >= 2");
  if (msi.rows() < std::max<std::size_t>(6, factor) ||
      msi.cols() < std::max<std::size_t>(6, factor)) {
    throw Error(ErrorCode::kTooSmall, "MSI " + std::to_string(msi.rows()) + "x" +
                                          std::to_string(msi.cols()) +
                                          " too small for 6-tap resampling at factor " +
                                          std::to_string(factor));
  }
  const std::size_t out_rows = msi.rows() / factor;
  const std::size_t out_cols = msi.cols() / factor;
  auto centre = [&](std::size_t i) {
    return (static_cast<double>(i) + 0.5) * static_cast<double>(factor) - 0.5;
  };
  std::vector<QuinticStencil> sr(out_rows), sc(out_cols);
  for (std::size_t i = 0; i < out_rows; ++i) sr[i] = quintic_stencil(centre(i), msi.rows());
  for (std::size_t j = 0; j < out_cols; ++j) sc[j] = quintic_stencil(centre(j), msi.cols());

  HyperCube out(out_rows, out_cols, msi.bands(), msi.wavelengths_nm(), msi.name());
  std::vector<double> tmp(msi.rows() * out_cols);
  for (std::size_t b = 0; b < msi.bands(); ++b) {
    auto src = msi.plane(b);
    for (std::size_t r = 0; r < msi.rows(); ++r) {
      for (std::size_t j = 0; j < out_cols; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) acc += sc[j].w[k] * src[r * msi.cols() + sc[j].start + k];
        tmp[r * out_cols + j] = acc;
      }
    }
    for (std::size_t i = 0; i < out_rows; ++i) {
      for (std::size_t j = 0; j < out_cols; ++j) {
        double acc = 0.0;
        for (int k = 0; k < 6; ++k) acc += sr[i].w[k] * tmp[(sr[i].start + k) * out_cols + j];
        out.at(i, j, b) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

HyperCube synthetic_smooth_cube(std::size_t rows, std::size_t cols, std::size_t bands,
                                std::uint64_t seed, double sigma_lo, double sigma_hi) {
  if (rows == 0 || cols == 0 || bands == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic cube dims must be > 0");
  }
  if (!(sigma_lo > 0) || !(sigma_hi >= sigma_lo)) {
    throw Error(ErrorCode::kInvalidArgument, "need 0 < sigma_lo <= sigma_hi");
  }
  constexpr int kMaterials = 6;
  Rng rng(seed);
  const double scale = static_cast<double>(std::min(rows, cols)) / 32.0;

  std::vector<double> wl(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    wl[b] = bands == 1 ? 450.0 : 450.0 + 400.0 * static_cast<double>(b) /
                                             static_cast<double>(bands - 1);
  }
  HyperCube cube(rows, cols, bands, wl, "synthetic");
  std::vector<double> acc(rows * cols * bands, 0.05);
  for (int k = 0; k < kMaterials; ++k) {
    const double cy = rng.uniform(0.0, static_cast<double>(rows));
    const double cx = rng.uniform(0.0, static_cast<double>(cols));
    const double sigma = rng.uniform(sigma_lo, sigma_hi) * scale;
    std::vector<double> amp(bands);
    for (auto& a : amp) a = rng.uniform(0.2, 1.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double dy = static_cast<double>(r) - cy;
        const double dx = static_cast<double>(c) - cx;
        const double g = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
        for (std::size_t b = 0; b < bands; ++b) acc[cube.index(r, c, b)] += amp[b] * g;
      }
    }
  }
  auto dst = cube.mutable_data();
  for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i]);
  return cube;
}

}  // namespace hyperfuse::simulate
