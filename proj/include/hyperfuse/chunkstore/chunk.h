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

#ifndef HYPERFUSE_CHUNKSTORE_CHUNK_H_
#define HYPERFUSE_CHUNKSTORE_CHUNK_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace hyperfuse::chunkstore {

using ByteSpan = std::span<const std::uint8_t>;

// CRC-32 (IEEE 802.3: reflected 0x04C11DB7, init and xorout 0xFFFFFFFF).
std::uint32_t crc32(ByteSpan data);

std::string crc_hex(std::uint32_t crc);  // 8 lowercase hex digits
std::uint32_t parse_crc_hex(std::string_view text);

struct ChunkId {
  std::array<std::uint8_t, 16> bytes{};

  std::string hex() const;  // 32 lowercase hex digits
  static ChunkId from_hex(std::string_view text);

  // Deterministic id for chunk `index` of a file, mixed from the store seed,
  // the file name and the chunk size. Collisions need identical inputs.
  static ChunkId derive(std::uint64_t seed, std::string_view file_name, std::size_t chunk_size,
                        std::size_t index);

  friend bool operator==(const ChunkId&, const ChunkId&) = default;
  friend auto operator<=>(const ChunkId&, const ChunkId&) = default;
};

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_CHUNK_H_
