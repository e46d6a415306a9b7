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


#include <doctest.h>

#include "hyperfuse/resample.h"
#include "hyperfuse/rng.h"

using namespace hyperfuse;

namespace {

Image random_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Image img(rows, cols);
  for (auto& v : img.data) v = rng.uniform(0, 1);
  return img;
}

}  // namespace

TEST_CASE("linear taps are the identity for equal sizes") {
  auto taps = linear_taps(7, 7);
  REQUIRE(taps.size() == 7);
  for (std::size_t u = 0; u < 7; ++u) {
    const double x = taps[u].lo * (1 - taps[u].w) + taps[u].hi * taps[u].w;
    CHECK(x == doctest::Approx(static_cast<double>(u)));
  }
  Image img = random_image(5, 6, 1);
  CHECK(resize_bilinear(img, 5, 6) == img);
}

TEST_CASE("linear taps place output centres on the input grid") {
  // 4 -> 8: output u sits at (u + 0.5) / 2 - 0.5.
  auto taps = linear_taps(4, 8);
  for (std::size_t u = 0; u < 8; ++u) {
    double pos = std::clamp((u + 0.5) * 0.5 - 0.5, 0.0, 3.0);
    const double x = taps[u].lo * (1 - taps[u].w) + taps[u].hi * taps[u].w;
    CHECK(x == doctest::Approx(pos));
    CHECK(taps[u].lo <= taps[u].hi);
    CHECK(taps[u].hi < 4);
  }
}

TEST_CASE("bilinear upsampling reproduces affine images away from the clamped border") {
  Image src(6, 5);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 5; ++c) src.at(r, c) = 2.0 + 0.5 * r - 0.25 * c;
  }
  Image up = resize_bilinear(src, 24, 20);
  for (std::size_t r = 2; r < 22; ++r) {
    for (std::size_t c = 2; c < 18; ++c) {
      const double y = (r + 0.5) / 4 - 0.5;
      const double x = (c + 0.5) / 4 - 0.5;
      CHECK(up.at(r, c) == doctest::Approx(2.0 + 0.5 * y - 0.25 * x));
    }
  }
}

TEST_CASE("window resize equals resizing the cropped window") {
  Image src = random_image(9, 11, 2);
  Image crop(4, 5);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 5; ++c) crop.at(r, c) = src.at(3 + r, 2 + c);
  }
  CHECK(resize_window_bilinear(src, 3, 2, 4, 5, 7, 3) == resize_bilinear(crop, 7, 3));
}

TEST_CASE("downsizing a constant image keeps the constant") {
  Image flat(8, 8, 0.75);
  Image small = resize_bilinear(flat, 3, 5);
  for (double v : small.data) CHECK(v == doctest::Approx(0.75));
}

TEST_CASE("nearest upsampling replicates blocks") {
  Image src = random_image(2, 3, 3);
  Image up = upsample_nearest(src, 3);
  REQUIRE(up.rows == 6);
  REQUIRE(up.cols == 9);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 9; ++c) CHECK(up.at(r, c) == src.at(r / 3, c / 3));
  }
  HyperCube cube(2, 2, 2, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8}, {400, 500}, "n");
  HyperCube cu = upsample_nearest(cube, 2);
  CHECK(cu.rows() == 4);
  CHECK(cu.at(3, 3, 1) == 8);
  CHECK(cu.at(2, 1, 0) == 3);
  CHECK(cu.wavelengths_nm() == cube.wavelengths_nm());
}
