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

#include "hyperfuse/resample.h"

#include <algorithm>
#include <cmath>

#include "hyperfuse/error.h"

namespace hyperfuse {

std::vector<LinearTap> linear_taps(std::size_t n_in, std::size_t n_out) {
  std::vector<LinearTap> taps(n_out);
  const double scale = static_cast<double>(n_in) / static_cast<double>(n_out);
  const double max_pos = static_cast<double>(n_in - 1);
  for (std::size_t u = 0; u < n_out; ++u) {
    double p = (static_cast<double>(u) + 0.5) * scale - 0.5;
    p = std::clamp(p, 0.0, max_pos);
    auto lo = static_cast<std::size_t>(std::floor(p));
    std::size_t hi = std::min(lo + 1, n_in - 1);
    taps[u] = {lo, hi, p - static_cast<double>(lo)};
  }
  return taps;
}

Image resize_window_bilinear(const Image& src, std::size_t top, std::size_t left,
                             std::size_t height, std::size_t width, std::size_t rows,
                             std::size_t cols) {
  if (height == 0 || width == 0 || top + height > src.rows || left + width > src.cols) {
    throw Error(ErrorCode::kDimMismatch, "resize window outside source image");
  }
  auto ty = linear_taps(height, rows);
  auto tx = linear_taps(width, cols);
  Image out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row_lo = &src.data[(top + ty[r].lo) * src.cols + left];
    const double* row_hi = &src.data[(top + ty[r].hi) * src.cols + left];
    const double wy = ty[r].w;
    for (std::size_t c = 0; c < cols; ++c) {
      const double wx = tx[c].w;
      double a = row_lo[tx[c].lo] * (1.0 - wx) + row_lo[tx[c].hi] * wx;
      double b = row_hi[tx[c].lo] * (1.0 - wx) + row_hi[tx[c].hi] * wx;
      out.at(r, c) = a * (1.0 - wy) + b * wy;
    }
  }
  return out;
}

Image resize_bilinear(const Image& src, std::size_t rows, std::size_t cols) {
  return resize_window_bilinear(src, 0, 0, src.rows, src.cols, rows, cols);
}

Image upsample_nearest(const Image& src, std::size_t factor) {
  Image out(src.rows * factor, src.cols * factor);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) = src.at(r / factor, c / factor);
  }
  return out;
}

HyperCube upsample_nearest(const HyperCube& src, std::size_t factor) {
  HyperCube out(src.rows() * factor, src.cols() * factor, src.bands(), src.wavelengths_nm(),
                src.name());
  for (std::size_t b = 0; b < src.bands(); ++b) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t c = 0; c < out.cols(); ++c) {
        out.at(r, c, b) = src.at(r / factor, c / factor, b);
      }
    }
  }
  return out;
}

}  // namespace hyperfuse
