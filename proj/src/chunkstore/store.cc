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


#include "hyperfuse/chunkstore/store.h"

#include <algorithm>

#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"

namespace hyperfuse::chunkstore {

ChunkManifest put(const std::string& file_name, ByteSpan data, const PutOptions& opts,
                  NodeRegistry& registry) {
  if (opts.chunk_size == 0) throw Error(ErrorCode::kZeroChunkSize, "chunk size must be > 0");
  if (opts.replication == 0) throw Error(ErrorCode::kInvalidArgument, "replication must be >= 1");
  if (!valid_manifest_token(file_name)) {
    throw Error(ErrorCode::kInvalidArgument, "bad file name '" + file_name + "'");
  }
  const std::vector<std::string> alive = registry.alive_ids();
  if (alive.empty()) throw Error(ErrorCode::kNoAliveNodes, "no alive storage node");

  ChunkManifest m;
  m.file_name = file_name;
  m.file_size = data.size();
  m.chunk_size = opts.chunk_size;
  m.replication = opts.replication;

  const std::size_t n = alive.size();
  const std::size_t copies = std::min(opts.replication, n);
  const std::size_t offset = static_cast<std::size_t>(Rng(opts.seed).below(n));
  const std::size_t count = (data.size() + opts.chunk_size - 1) / opts.chunk_size;
  m.chunks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t begin = i * opts.chunk_size;
    const ByteSpan payload = data.subspan(begin, std::min(opts.chunk_size, data.size() - begin));
    ChunkRecord rec;
    rec.id = ChunkId::derive(opts.seed, file_name, opts.chunk_size, i);
    rec.length = payload.size();
    rec.crc = crc32(payload);
    for (std::size_t k = 0; k < copies; ++k) {
      const std::string& node = alive[(offset + i + k) % n];
      ChunkTransport* t = registry.transport(node);
      const Status s = t->put(rec.id, payload);
      if (s != Status::kOk) {
        throw Error(ErrorCode::kIoError, "node " + node + " rejected chunk " + rec.id.hex() +
                                             ": " + std::string(status_name(s)));
      }
      rec.placements.push_back(node);
    }
    m.chunks.push_back(std::move(rec));
  }
  m.validate();
  return m;
}

std::vector<std::uint8_t> get(const ChunkManifest& manifest, const NodeRegistry& registry) {
  manifest.validate();
  std::vector<std::uint8_t> out;
  out.reserve(manifest.file_size);
  std::vector<std::uint8_t> buf;
  for (const auto& c : manifest.chunks) {
    std::string tried;
    bool corrupt = false;
    bool ok = false;
    for (const auto& node : c.placements) {
      if (!tried.empty()) tried += ",";
      tried += node;
      ChunkTransport* t = registry.transport(node);
      if (t == nullptr || !registry.alive(node)) {
        tried += "(dead)";
        continue;
      }
      Status s;
      try {
        s = t->get(c.id, buf);
      } catch (const Error&) {
        tried += "(unreachable)";
        continue;
      }
      if (s == Status::kOk && (buf.size() != c.length || crc32(buf) != c.crc)) {
        s = Status::kCrcFail;
      }
      if (s == Status::kCrcFail) corrupt = true;
      if (s != Status::kOk) {
        tried += "(" + std::string(status_name(s)) + ")";
        continue;
      }
      ok = true;
      break;
    }
    if (!ok) {
      if (corrupt) {
        throw Error(ErrorCode::kChecksumMismatch,
                    "chunk " + c.id.hex() + " failed its CRC on every readable replica [" +
                        tried + "]");
      }
      throw Error(ErrorCode::kChunkUnavailable,
                  "chunk " + c.id.hex() + " unavailable, tried [" + tried + "]");
    }
    out.insert(out.end(), buf.begin(), buf.end());
  }
  return out;
}

DeleteReport remove(const ChunkManifest& manifest, const NodeRegistry& registry) {
  DeleteReport report;
  for (const auto& c : manifest.chunks) {
    for (const auto& node : c.placements) {
      ChunkTransport* t = registry.transport(node);
      if (t == nullptr || !registry.alive(node)) {
        ++report.skipped_dead;
        continue;
      }
      Status s;
      try {
        s = t->remove(c.id);
      } catch (const Error&) {
        ++report.skipped_dead;  // unreachable
        continue;
      }
      if (s == Status::kOk) {
        ++report.removed;
      } else if (s == Status::kNotFound) {
        ++report.missing;
      } else {
        throw Error(ErrorCode::kIoError, "node " + node + " failed to delete chunk " + c.id.hex());
      }
    }
  }
  return report;
}

}  // namespace hyperfuse::chunkstore
