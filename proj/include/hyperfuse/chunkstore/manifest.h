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

// File -> chunk metadata. On disk:
//
//   file <name> <size> <chunk_size> <replication>
//   chunk <hex-id> <length> <crc32-hex> <node,node,...>
//   ...

#ifndef HYPERFUSE_CHUNKSTORE_MANIFEST_H_
#define HYPERFUSE_CHUNKSTORE_MANIFEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hyperfuse/chunkstore/chunk.h"

namespace hyperfuse::chunkstore {

struct ChunkRecord {
  ChunkId id;
  std::size_t length = 0;
  std::uint32_t crc = 0;
  std::vector<std::string> placements;  // node ids, preferred replica first

  bool operator==(const ChunkRecord&) const = default;
};

struct ChunkManifest {
  std::string file_name;
  std::size_t file_size = 0;
  std::size_t chunk_size = 0;
  std::size_t replication = 0;
  std::vector<ChunkRecord> chunks;

  // Throws ManifestParseError on a broken invariant: lengths must sum to
  // file_size, every chunk but the last must be exactly chunk_size, and each
  // chunk needs 1..replication distinct placements.
  void validate() const;

  bool operator==(const ChunkManifest&) const = default;
};

// File names and node ids: non-empty, no whitespace, control characters or
// commas.
bool valid_manifest_token(std::string_view s);

std::string format_manifest(const ChunkManifest& m);
ChunkManifest parse_manifest(const std::string& text);

void save_manifest(const ChunkManifest& m, const std::filesystem::path& path);
ChunkManifest load_manifest(const std::filesystem::path& path);

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_MANIFEST_H_
