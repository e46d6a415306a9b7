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


#include "hyperfuse/chunkstore/chunk.h"

#include <zlib.h>

#include <charconv>
#include <cstdio>

#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"

namespace hyperfuse::chunkstore {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// FNV-1a, only used to fold the file name into the id seed.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint32_t crc32(ByteSpan data) {
  uLong crc = ::crc32_z(0L, Z_NULL, 0);
  crc = ::crc32_z(crc, data.data(), data.size());
  return static_cast<std::uint32_t>(crc);
}

std::string crc_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

std::uint32_t parse_crc_hex(std::string_view text) {
  std::uint32_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v, 16);
  if (text.size() != 8 || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kManifestParseError, "bad crc '" + std::string(text) + "'");
  }
  return v;
}

std::string ChunkId::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(32, '0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    s[2 * i] = kDigits[bytes[i] >> 4];
    s[2 * i + 1] = kDigits[bytes[i] & 0xf];
  }
  return s;
}

ChunkId ChunkId::from_hex(std::string_view text) {
  if (text.size() != 32) {
    throw Error(ErrorCode::kManifestParseError, "chunk id needs 32 hex digits");
  }
  ChunkId id;
  for (std::size_t i = 0; i < 16; ++i) {
    int hi = hex_digit(text[2 * i]);
    int lo = hex_digit(text[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(ErrorCode::kManifestParseError, "bad chunk id '" + std::string(text) + "'");
    }
    id.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return id;
}

ChunkId ChunkId::derive(std::uint64_t seed, std::string_view file_name, std::size_t chunk_size,
                        std::size_t index) {
  std::uint64_t s = Rng::derive(seed, fnv1a(file_name));
  s = Rng::derive(s, chunk_size);
  Rng rng(Rng::derive(s, index));
  ChunkId id;
  for (int half = 0; half < 2; ++half) {
    std::uint64_t v = rng.next();
    for (int k = 0; k < 8; ++k) id.bytes[half * 8 + k] = static_cast<std::uint8_t>(v >> (56 - 8 * k));
  }
  return id;
}

}  // namespace hyperfuse::chunkstore
