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

// Client-side file operations: split/place/replicate, reassemble with
// replica failover, and delete.

#ifndef HYPERFUSE_CHUNKSTORE_STORE_H_
#define HYPERFUSE_CHUNKSTORE_STORE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/chunkstore/manifest.h"
#include "hyperfuse/chunkstore/node.h"

namespace hyperfuse::chunkstore {

struct PutOptions {
  std::size_t chunk_size = 64 * 1024;
  std::size_t replication = 2;
  std::uint64_t seed = 0;
};

// Splits `data` into ceil(size / chunk_size) chunks. Chunk i goes to the
// alive nodes at positions (offset + i + k) mod n, k < min(replication, n),
// where offset is drawn from the seed. Throws ZeroChunkSize, NoAliveNodes,
// InvalidArgument (replication 0, bad name) or IoError.
ChunkManifest put(const std::string& file_name, ByteSpan data, const PutOptions& opts,
                  NodeRegistry& registry);

// Reassembles the file. Each chunk is read from its placements in order,
// skipping dead or unreachable nodes and replicas whose bytes fail the CRC.
// Throws ChecksumMismatch when every reachable replica was corrupt, and
// ChunkUnavailable when no replica could be read at all.
std::vector<std::uint8_t> get(const ChunkManifest& manifest, const NodeRegistry& registry);

struct DeleteReport {
  std::size_t removed = 0;       // replicas deleted
  std::size_t missing = 0;       // replicas already gone
  std::size_t skipped_dead = 0;  // replicas on dead or unreachable nodes
};

// Removes every replica on alive, reachable nodes. Deleting twice is a no-op success.
DeleteReport remove(const ChunkManifest& manifest, const NodeRegistry& registry);

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_STORE_H_
