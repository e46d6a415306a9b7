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

#ifndef HYPERFUSE_RESAMPLE_H_
#define HYPERFUSE_RESAMPLE_H_

#include <cstddef>
#include <vector>

#include "hyperfuse/datacube.h"
#include "hyperfuse/image.h"

namespace hyperfuse {

// One output sample of a 1-D linear interpolation: lo*(1-w) + hi*w.
struct LinearTap {
  std::size_t lo;
  std::size_t hi;
  double w;
};

// Pixel-center aligned taps mapping n_in samples onto n_out samples: output
// u sits at input coordinate (u + 0.5) * n_in / n_out - 0.5, clamped to the
// valid range.
std::vector<LinearTap> linear_taps(std::size_t n_in, std::size_t n_out);

Image resize_bilinear(const Image& src, std::size_t rows, std::size_t cols);

// Bilinear resize of a rectangular window of src.
Image resize_window_bilinear(const Image& src, std::size_t top, std::size_t left,
                             std::size_t height, std::size_t width, std::size_t rows,
                             std::size_t cols);

Image upsample_nearest(const Image& src, std::size_t factor);
HyperCube upsample_nearest(const HyperCube& src, std::size_t factor);

}  // namespace hyperfuse

#endif  // HYPERFUSE_RESAMPLE_H_
