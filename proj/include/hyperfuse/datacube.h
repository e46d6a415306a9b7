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

// Hyperspectral / multispectral cube type and its on-disk format.
//
// A cube on disk is a pair of files sharing a stem:
//   <stem>.hdr  UTF-8 text, one `key = value` per line, keys in fixed order:
//               rows, cols, bands, dtype (= f32le), interleave (= bsq),
//               optional wavelengths_nm (comma separated), optional name.
//   <stem>.bin  raw little-endian IEEE-754 binary32 samples, band
//               sequential: band-major, then row-major within a band.

#ifndef HYPERFUSE_DATACUBE_H_
#define HYPERFUSE_DATACUBE_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperfuse/image.h"

namespace hyperfuse {

enum class Interleave { kBsq };

// rows x cols x bands of float samples in BSQ order. Shape and wavelength
// invariants are enforced on construction; finiteness is enforced at the IO
// boundary (load_cube / save_cube).
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands,
            std::vector<float> data, std::vector<double> wavelengths_nm = {},
            std::string name = {});
  // Zero-filled cube.
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands,
            std::vector<double> wavelengths_nm = {}, std::string name = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t bands() const { return bands_; }
  std::size_t pixels() const { return rows_ * cols_; }
  Interleave interleave() const { return Interleave::kBsq; }
  const std::vector<double>& wavelengths_nm() const { return wavelengths_nm_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  static std::size_t flat_index(std::size_t rows, std::size_t cols,
                                std::size_t r, std::size_t c, std::size_t b) {
    return b * rows * cols + r * cols + c;
  }
  std::size_t index(std::size_t r, std::size_t c, std::size_t b) const {
    return flat_index(rows_, cols_, r, c, b);
  }

  float at(std::size_t r, std::size_t c, std::size_t b) const {
    return data_[index(r, c, b)];
  }
  float& at(std::size_t r, std::size_t c, std::size_t b) {
    return data_[index(r, c, b)];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  // Contiguous view of one band plane.
  std::span<const float> plane(std::size_t b) const {
    return std::span<const float>(data_).subspan(b * pixels(), pixels());
  }
  std::span<float> mutable_plane(std::size_t b) {
    return std::span<float>(data_).subspan(b * pixels(), pixels());
  }

  // Index of the first NaN/Inf sample, if any.
  std::optional<std::size_t> first_non_finite() const;

  // Bit-exact comparison of shape, metadata and samples.
  bool identical(const HyperCube& other) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> wavelengths_nm_;
  std::string name_;
  std::vector<float> data_;
};

struct CubeHeader {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t bands = 0;
  std::string dtype = "f32le";
  std::string interleave = "bsq";
  std::vector<double> wavelengths_nm;
  std::string name;

  std::size_t payload_bytes() const { return rows * cols * bands * 4; }
};

// <stem>.hdr -> <stem>.bin
std::filesystem::path payload_path_for(const std::filesystem::path& header_path);

std::string format_header(const CubeHeader& header);
CubeHeader parse_header(const std::string& text);
CubeHeader read_header(const std::filesystem::path& header_path);

// Decode a raw payload for the given header; refuses non-finite samples.
HyperCube decode_payload(const CubeHeader& header, std::span<const std::byte> payload);
std::vector<std::byte> encode_payload(const HyperCube& cube);

HyperCube load_cube(const std::filesystem::path& header_path);
void save_cube(const HyperCube& cube, const std::filesystem::path& header_path);

Image band(const HyperCube& cube, std::size_t b);

// Min-max scaled binary PGM (P5, maxval 255). A constant image maps to 0.
void export_band_image(const Image& image, const std::filesystem::path& path);
std::vector<unsigned char> scale_to_gray(const Image& image);

// Keep the top-left rows x cols window of every band.
HyperCube crop(const HyperCube& cube, std::size_t rows, std::size_t cols);

}  // namespace hyperfuse

#endif  // HYPERFUSE_DATACUBE_H_
