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

#include <cmath>

#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"
#include "hyperfuse/simulate.h"

using namespace hyperfuse;
using namespace hyperfuse::simulate;

namespace {

HyperCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed,
                      std::vector<double> wl = {}) {
  Rng rng(seed);
  std::vector<float> data(rows * cols * bands);
  for (auto& v : data) v = static_cast<float>(rng.uniform(0, 1));
  return HyperCube(rows, cols, bands, std::move(data), std::move(wl));
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kUsageError;
}

// Every sample of each band is its band index times 1000 plus the pixel index.
HyperCube indexed_cube(std::size_t rows, std::size_t cols, std::vector<double> wl) {
  const std::size_t bands = wl.size();
  HyperCube cube(rows, cols, bands, std::move(wl));
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t p = 0; p < rows * cols; ++p) {
      cube.mutable_plane(b)[p] = static_cast<float>(1000 * b + p);
    }
  }
  return cube;
}

void check_membership(const HyperCube& cube, const HyperCube& msi,
                      const std::vector<std::vector<std::size_t>>& members) {
  REQUIRE(msi.bands() == members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (std::size_t p = 0; p < cube.pixels(); ++p) {
      double sum = 0;
      for (std::size_t b : members[k]) sum += cube.plane(b)[p];
      CHECK(msi.plane(k)[p] == static_cast<float>(sum / static_cast<double>(members[k].size())));
    }
  }
}

}  // namespace

TEST_CASE("decimate 145x145x200 by 4 gives 36x36x200") {
  HyperCube cube(145, 145, 200);
  HyperCube lo = decimate(cube, 4);
  CHECK(lo.rows() == 36);
  CHECK(lo.cols() == 36);
  CHECK(lo.bands() == 200);
}

TEST_CASE("decimate matches a direct block-mean oracle") {
  HyperCube cube = random_cube(13, 10, 3, 7);
  HyperCube lo = decimate(cube, 3);
  REQUIRE(lo.rows() == 4);
  REQUIRE(lo.cols() == 3);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0;
        for (std::size_t i = 0; i < 9; ++i) s += cube.at(3 * r + i / 3, 3 * c + i % 3, b);
        CHECK(lo.at(r, c, b) == doctest::Approx(s / 9).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("decimate of a 4x4 block with values 1..16 is 8.5") {
  std::vector<float> v(16);
  for (int i = 0; i < 16; ++i) v[i] = static_cast<float>(i + 1);
  HyperCube lo = decimate(HyperCube(4, 4, 1, v), 4);
  CHECK(lo.at(0, 0, 0) == 8.5f);
  CHECK(decimate(HyperCube(4, 4, 1, v), 4, DecimationMode::kSubsample).at(0, 0, 0) == 1.0f);
}

TEST_CASE("decimate preserves constants and keeps the wavelengths") {
  HyperCube cube(8, 8, 2, std::vector<double>{500, 600});
  for (auto& v : cube.mutable_data()) v = 0.3f;
  HyperCube lo = decimate(cube, 2);
  for (float v : lo.data()) CHECK(v == doctest::Approx(0.3f));
  CHECK(lo.wavelengths_nm() == cube.wavelengths_nm());
}

TEST_CASE("decimate validates the factor") {
  HyperCube cube(8, 8, 1);
  CHECK(code_of([&] { decimate(cube, 1); }) == ErrorCode::kInvalidFactor);
  CHECK(code_of([&] { decimate(cube, 0); }) == ErrorCode::kInvalidFactor);
  CHECK(code_of([&] { decimate(cube, 9); }) == ErrorCode::kFactorTooLarge);
  CHECK(decimate(cube, 8).rows() == 1);
}

TEST_CASE("parallel and serial decimate are bit-identical") {
  HyperCube cube = random_cube(37, 41, 17, 11);
  for (auto mode : {DecimationMode::kMean, DecimationMode::kSubsample}) {
    CHECK(decimate(cube, 4, mode).identical(decimate_serial(cube, 4, mode)));
  }
}

TEST_CASE("default MSI ranges on five wavelengths") {
  // 450 and 510 fall in blue (445-516); 510 and 550 in green (506-595);
  // 650 in red (632-698); 800 in nir (757-853).
  HyperCube cube = indexed_cube(2, 3, {450, 510, 550, 650, 800});
  HyperCube msi = synthesize_msi(cube, default_msi_ranges());
  check_membership(cube, msi, {{0, 1}, {1, 2}, {3}, {4}});
  CHECK(msi.wavelengths_nm() == std::vector<double>{480.5, 550.5, 665, 805});
}

TEST_CASE("default MSI ranges on a 10 nm grid") {
  // 400, 410, ..., 790 nm.
  std::vector<double> wl;
  for (int b = 0; b < 40; ++b) wl.push_back(400 + 10 * b);
  HyperCube cube = indexed_cube(3, 3, wl);
  HyperCube msi = synthesize_msi(cube, default_msi_ranges());
  check_membership(cube, msi,
                   {{5, 6, 7, 8, 9, 10, 11},
                    {11, 12, 13, 14, 15, 16, 17, 18, 19},
                    {24, 25, 26, 27, 28, 29},
                    {36, 37, 38, 39}});
}

TEST_CASE("range edges are inclusive") {
  HyperCube cube = indexed_cube(1, 1, {445, 516, 517});
  HyperCube msi = synthesize_msi(cube, {{"b", 445, 516}});
  check_membership(cube, msi, {{0, 1}});
}

TEST_CASE("MSI synthesis errors") {
  HyperCube no_wl(2, 2, 3);
  CHECK(code_of([&] { synthesize_msi(no_wl, default_msi_ranges()); }) ==
        ErrorCode::kNoWavelengths);
  HyperCube cube = indexed_cube(1, 1, {450, 550});
  CHECK(code_of([&] { synthesize_msi(cube, {{"red", 632, 698}}); }) == ErrorCode::kEmptyRange);
}

TEST_CASE("parse_ranges") {
  auto r = parse_ranges("blue=445:516,nir=757.5:853");
  REQUIRE(r.size() == 2);
  CHECK(r[0].name == "blue");
  CHECK(r[0].lo_nm == 445);
  CHECK(r[1].lo_nm == 757.5);
  CHECK(r[1].hi_nm == 853);
  CHECK_THROWS_AS(parse_ranges("blue=445"), Error);
  CHECK_THROWS_AS(parse_ranges("blue=516:445"), Error);
  CHECK_THROWS_AS(parse_ranges("=1:2"), Error);
  CHECK_THROWS_AS(parse_ranges(""), Error);
  CHECK_THROWS_AS(parse_ranges("a=1:2x"), Error);
}

TEST_CASE("quintic resampling reproduces degree-5 polynomials") {
  auto px = [](double x) { return 0.3 + 0.1 * x - 0.02 * x * x + 1e-3 * std::pow(x, 3) -
                                  2e-5 * std::pow(x, 4) + 1e-7 * std::pow(x, 5); };
  auto py = [](double y) { return 1.0 - 0.05 * y + 1e-3 * y * y - 1e-6 * std::pow(y, 5); };
  const std::size_t rows = 24, cols = 20, f = 4;
  HyperCube msi(rows, cols, 2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      msi.at(r, c, 0) = static_cast<float>(py(r) * px(c));
      msi.at(r, c, 1) = static_cast<float>(py(r) + px(c));
    }
  }
  HyperCube lo = quintic_downsample_msi(msi, f);
  REQUIRE(lo.rows() == rows / f);
  REQUIRE(lo.cols() == cols / f);
  for (std::size_t i = 0; i < lo.rows(); ++i) {
    for (std::size_t j = 0; j < lo.cols(); ++j) {
      const double y = (i + 0.5) * f - 0.5;
      const double x = (j + 0.5) * f - 0.5;
      CHECK(lo.at(i, j, 0) == doctest::Approx(py(y) * px(x)).epsilon(1e-5));
      CHECK(lo.at(i, j, 1) == doctest::Approx(py(y) + px(x)).epsilon(1e-5));
    }
  }
}

TEST_CASE("quintic stencil weights sum to one and stay inside the grid") {
  for (std::size_t n : {6u, 7u, 20u}) {
    for (double pos = 0; pos <= n - 1; pos += 0.25) {
      QuinticStencil s = quintic_stencil(pos, n);
      CHECK(s.start + 6 <= n);
      double sum = 0;
      for (double w : s.w) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  QuinticStencil at_node = quintic_stencil(9.0, 20);
  CHECK(at_node.start == 7);
  CHECK(at_node.w[2] == doctest::Approx(1.0));
}

TEST_CASE("quintic resampling needs six samples per axis") {
  CHECK(code_of([] { quintic_downsample_msi(HyperCube(5, 8, 1), 4); }) == ErrorCode::kTooSmall);
  CHECK(code_of([] { quintic_downsample_msi(HyperCube(8, 8, 1), 1); }) ==
        ErrorCode::kInvalidFactor);
  CHECK_NOTHROW(quintic_downsample_msi(HyperCube(6, 6, 1), 4));
}

TEST_CASE("synthetic cube is seeded, positive and spans 450-850 nm") {
  HyperCube a = synthetic_smooth_cube(16, 12, 5, 42);
  HyperCube b = synthetic_smooth_cube(16, 12, 5, 42);
  HyperCube c = synthetic_smooth_cube(16, 12, 5, 43);
  CHECK(a.identical(b));
  CHECK_FALSE(a.identical(c));
  for (float v : a.data()) CHECK(v >= 0.05f);
  CHECK(a.wavelengths_nm() == std::vector<double>{450, 550, 650, 750, 850});
  CHECK_THROWS_AS(synthetic_smooth_cube(0, 4, 4, 1), Error);
  CHECK_THROWS_AS(synthetic_smooth_cube(4, 4, 4, 1, 3.0, 2.0), Error);
}
