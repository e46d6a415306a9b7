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

#include "hyperfuse/datacube.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hyperfuse/error.h"

namespace hyperfuse {

namespace fs = std::filesystem;

namespace {

void check_wavelengths(const std::vector<double>& wl, std::size_t bands) {
  if (wl.empty()) return;
  if (wl.size() != bands) {
    throw Error(ErrorCode::kInvalidArgument,
                "wavelengths_nm has " + std::to_string(wl.size()) +
                    " entries for " + std::to_string(bands) + " bands");
  }
  for (std::size_t i = 0; i < wl.size(); ++i) {
    if (!std::isfinite(wl[i]) || (i > 0 && !(wl[i] > wl[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "wavelengths_nm must be finite and strictly increasing (index " +
                      std::to_string(i) + ")");
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void header_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kHeaderParseError,
              "line " + std::to_string(line) + ": " + what);
}

std::size_t parse_count(const std::string& value, std::size_t line,
                        const std::string& key) {
  std::size_t v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    header_error(line, "field '" + key + "' is not an unsigned integer: '" + value + "'");
  }
  if (v == 0) header_error(line, "field '" + key + "' must be > 0");
  return v;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) |
           (v >> 24);
  }
  return v;
}

std::vector<std::byte> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  in.seekg(0, std::ios::end);
  std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw Error(ErrorCode::kIoError, "read failed: " + path.string());
  }
  return bytes;
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands,
                     std::vector<float> data, std::vector<double> wavelengths_nm,
                     std::string name)
    : rows_(rows),
      cols_(cols),
      bands_(bands),
      wavelengths_nm_(std::move(wavelengths_nm)),
      name_(std::move(name)),
      data_(std::move(data)) {
  if (data_.size() != rows_ * cols_ * bands_) {
    throw Error(ErrorCode::kShapeMismatch,
                "cube data has " + std::to_string(data_.size()) + " samples, expected " +
                    std::to_string(rows_ * cols_ * bands_));
  }
  check_wavelengths(wavelengths_nm_, bands_);
}

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands,
                     std::vector<double> wavelengths_nm, std::string name)
    : HyperCube(rows, cols, bands, std::vector<float>(rows * cols * bands, 0.0f),
                std::move(wavelengths_nm), std::move(name)) {}

std::optional<std::size_t> HyperCube::first_non_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) return i;
  }
  return std::nullopt;
}

bool HyperCube::identical(const HyperCube& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_ || bands_ != other.bands_ ||
      name_ != other.name_ || wavelengths_nm_.size() != other.wavelengths_nm_.size()) {
    return false;
  }
  if (!wavelengths_nm_.empty() &&
      std::memcmp(wavelengths_nm_.data(), other.wavelengths_nm_.data(),
                  wavelengths_nm_.size() * sizeof(double)) != 0) {
    return false;
  }
  return data_.empty() ||
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

fs::path payload_path_for(const fs::path& header_path) {
  fs::path p = header_path;
  p.replace_extension(".bin");
  return p;
}

std::string format_header(const CubeHeader& h) {
  std::ostringstream os;
  os << "rows = " << h.rows << "\n";
  os << "cols = " << h.cols << "\n";
  os << "bands = " << h.bands << "\n";
  os << "dtype = " << h.dtype << "\n";
  os << "interleave = " << h.interleave << "\n";
  if (!h.wavelengths_nm.empty()) {
    os << "wavelengths_nm = ";
    for (std::size_t i = 0; i < h.wavelengths_nm.size(); ++i) {
      if (i) os << ",";
      os << format_double(h.wavelengths_nm[i]);
    }
    os << "\n";
  }
  if (!h.name.empty()) os << "name = " << h.name << "\n";
  return os.str();
}

CubeHeader parse_header(const std::string& text) {
  static const char* kOrder[] = {"rows",  "cols",           "bands", "dtype",
                                 "interleave", "wavelengths_nm", "name"};
  constexpr std::size_t kRequired = 5;

  CubeHeader h;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t next_key = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) header_error(line_no, "empty line");
    auto sep = line.find(" = ");
    if (sep == std::string::npos) header_error(line_no, "expected 'key = value'");
    std::string key = line.substr(0, sep);
    std::string value = line.substr(sep + 3);

    auto it = std::find_if(std::begin(kOrder), std::end(kOrder),
                           [&](const char* k) { return key == k; });
    if (it == std::end(kOrder)) header_error(line_no, "unknown field '" + key + "'");
    std::size_t slot = static_cast<std::size_t>(it - std::begin(kOrder));
    // Optional fields may be skipped, required ones may not.
    if (slot < next_key || (slot > next_key && next_key < kRequired)) {
      header_error(line_no, "field '" + key + "' out of order");
    }
    next_key = slot + 1;

    if (key == "rows") {
      h.rows = parse_count(value, line_no, key);
    } else if (key == "cols") {
      h.cols = parse_count(value, line_no, key);
    } else if (key == "bands") {
      h.bands = parse_count(value, line_no, key);
    } else if (key == "dtype") {
      if (value != "f32le") header_error(line_no, "dtype must be f32le, got '" + value + "'");
      h.dtype = value;
    } else if (key == "interleave") {
      if (value != "bsq") header_error(line_no, "interleave must be bsq, got '" + value + "'");
      h.interleave = value;
    } else if (key == "wavelengths_nm") {
      std::size_t pos = 0;
      while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        if (comma == std::string::npos) comma = value.size();
        double v = 0;
        auto res = std::from_chars(value.data() + pos, value.data() + comma, v);
        if (res.ec != std::errc() || res.ptr != value.data() + comma) {
          header_error(line_no, "bad wavelength '" + value.substr(pos, comma - pos) + "'");
        }
        h.wavelengths_nm.push_back(v);
        pos = comma + 1;
      }
      if (h.wavelengths_nm.size() != h.bands) {
        header_error(line_no, "wavelengths_nm has " + std::to_string(h.wavelengths_nm.size()) +
                                  " entries, bands = " + std::to_string(h.bands));
      }
      for (std::size_t i = 1; i < h.wavelengths_nm.size(); ++i) {
        if (!(h.wavelengths_nm[i] > h.wavelengths_nm[i - 1])) {
          header_error(line_no, "wavelengths_nm not strictly increasing");
        }
      }
    } else {
      h.name = value;
    }
  }
  if (next_key < kRequired) {
    header_error(line_no + 1, std::string("missing field '") + kOrder[next_key] + "'");
  }
  return h;
}

CubeHeader read_header(const fs::path& header_path) {
  if (!fs::exists(header_path)) throw Error(ErrorCode::kMissingFile, header_path.string());
  auto bytes = read_file(header_path);
  return parse_header(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

HyperCube decode_payload(const CubeHeader& header, std::span<const std::byte> payload) {
  if (payload.size() != header.payload_bytes()) {
    throw Error(ErrorCode::kPayloadSizeMismatch,
                "expected " + std::to_string(header.payload_bytes()) + " bytes, got " +
                    std::to_string(payload.size()));
  }
  std::vector<float> data(header.rows * header.cols * header.bands);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t word;
    std::memcpy(&word, payload.data() + 4 * i, 4);
    data[i] = std::bit_cast<float>(to_le(word));
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "sample index " + std::to_string(i));
    }
  }
  return HyperCube(header.rows, header.cols, header.bands, std::move(data),
                   header.wavelengths_nm, header.name);
}

std::vector<std::byte> encode_payload(const HyperCube& cube) {
  auto data = cube.data();
  std::vector<std::byte> out(data.size() * 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t word = to_le(std::bit_cast<std::uint32_t>(data[i]));
    std::memcpy(out.data() + 4 * i, &word, 4);
  }
  return out;
}

HyperCube load_cube(const fs::path& header_path) {
  CubeHeader header = read_header(header_path);
  fs::path payload_path = payload_path_for(header_path);
  if (!fs::exists(payload_path)) throw Error(ErrorCode::kMissingFile, payload_path.string());
  auto payload = read_file(payload_path);
  return decode_payload(header, payload);
}

void save_cube(const HyperCube& cube, const fs::path& header_path) {
  if (cube.rows() == 0 || cube.cols() == 0 || cube.bands() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot save an empty cube");
  }
  if (auto bad = cube.first_non_finite()) {
    throw Error(ErrorCode::kNonFiniteValue, "sample index " + std::to_string(*bad));
  }
  if (cube.name().find_first_of("\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "cube name must be a single line");
  }
  CubeHeader header;
  header.rows = cube.rows();
  header.cols = cube.cols();
  header.bands = cube.bands();
  header.wavelengths_nm = cube.wavelengths_nm();
  header.name = cube.name();
  std::string text = format_header(header);
  write_file(header_path, text.data(), text.size());
  auto payload = encode_payload(cube);
  write_file(payload_path_for(header_path), payload.data(), payload.size());
}

Image band(const HyperCube& cube, std::size_t b) {
  if (b >= cube.bands()) {
    throw Error(ErrorCode::kBandOutOfRange,
                "band " + std::to_string(b) + " of " + std::to_string(cube.bands()));
  }
  auto plane = cube.plane(b);
  return Image(cube.rows(), cube.cols(), std::vector<double>(plane.begin(), plane.end()));
}

std::vector<unsigned char> scale_to_gray(const Image& image) {
  if (image.empty()) throw Error(ErrorCode::kEmptyImage, "cannot export an empty image");
  auto [lo_it, hi_it] = std::minmax_element(image.data.begin(), image.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kNonFiniteValue, "image contains NaN/Inf");
  }
  std::vector<unsigned char> gray(image.size(), 0);
  if (hi > lo) {
    for (std::size_t i = 0; i < image.size(); ++i) {
      double v = (image.data[i] - lo) * 255.0 / (hi - lo);
      gray[i] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return gray;
}

void export_band_image(const Image& image, const fs::path& path) {
  auto gray = scale_to_gray(image);
  std::string header = "P5\n" + std::to_string(image.cols) + " " +
                       std::to_string(image.rows) + "\n255\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

HyperCube crop(const HyperCube& cube, std::size_t rows, std::size_t cols) {
  if (rows > cube.rows() || cols > cube.cols() || rows == 0 || cols == 0) {
    throw Error(ErrorCode::kDimMismatch,
                "cannot crop " + std::to_string(cube.rows()) + "x" + std::to_string(cube.cols()) +
                    " to " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  HyperCube out(rows, cols, cube.bands(), cube.wavelengths_nm(), cube.name());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out.at(r, c, b) = cube.at(r, c, b);
    }
  }
  return out;
}

}  // namespace hyperfuse
