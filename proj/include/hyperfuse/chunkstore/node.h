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

// Storage nodes and the registry that tracks them.

#ifndef HYPERFUSE_CHUNKSTORE_NODE_H_
#define HYPERFUSE_CHUNKSTORE_NODE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hyperfuse/chunkstore/chunk.h"

namespace hyperfuse::chunkstore {

// Values match the status byte of the TCP protocol.
enum class Status : std::uint8_t { kOk = 0, kNotFound = 1, kCrcFail = 2, kError = 3 };

std::string_view status_name(Status s);

// One storage node as seen by a client. Implementations throw Error(IoError)
// when the node cannot be reached at all.
class ChunkTransport {
 public:
  virtual ~ChunkTransport() = default;

  virtual Status put(const ChunkId& id, ByteSpan payload) = 0;
  virtual Status get(const ChunkId& id, std::vector<std::uint8_t>& out) = 0;
  virtual Status remove(const ChunkId& id) = 0;
  virtual bool ping() = 0;
  virtual std::string describe() const = 0;
};

// A directory of `<hex-id>.chunk` payloads with `<hex-id>.crc` sidecars.
// get() re-checks the payload against its sidecar and reports kCrcFail on
// mismatch. Shared by the local transport and the block server.
class DirStore {
 public:
  explicit DirStore(std::filesystem::path root);

  Status put(const ChunkId& id, ByteSpan payload);
  Status get(const ChunkId& id, std::vector<std::uint8_t>& out) const;
  Status remove(const ChunkId& id);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path chunk_path(const ChunkId& id) const;
  std::filesystem::path crc_path(const ChunkId& id) const;

 private:
  std::filesystem::path root_;
};

class DirTransport : public ChunkTransport {
 public:
  explicit DirTransport(std::filesystem::path root) : store_(std::move(root)) {}

  Status put(const ChunkId& id, ByteSpan payload) override { return store_.put(id, payload); }
  Status get(const ChunkId& id, std::vector<std::uint8_t>& out) override {
    return store_.get(id, out);
  }
  Status remove(const ChunkId& id) override { return store_.remove(id); }
  bool ping() override;
  std::string describe() const override { return "dir:" + store_.root().string(); }

  const DirStore& store() const { return store_; }

 private:
  DirStore store_;
};

// Opens a fresh connection per request.
class TcpTransport : public ChunkTransport {
 public:
  TcpTransport(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}

  Status put(const ChunkId& id, ByteSpan payload) override;
  Status get(const ChunkId& id, std::vector<std::uint8_t>& out) override;
  Status remove(const ChunkId& id) override;
  bool ping() override;
  std::string describe() const override;

 private:
  std::string host_;
  std::uint16_t port_;
};

// `[id=]dir:/path` or `[id=]tcp:host:port`; entries are comma-separated and
// unnamed entries get ids n0, n1, ... by position.
struct NodeSpec {
  enum class Kind { kDir, kTcp };

  std::string id;
  Kind kind = Kind::kDir;
  std::string path;
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const;
};

std::vector<NodeSpec> parse_node_specs(const std::string& text);

struct NodeInfo {
  std::string id;
  std::string address;
  bool alive = true;
};

// Thread-safe: lookups take a shared lock, membership and liveness changes an
// exclusive one.
class NodeRegistry {
 public:
  NodeRegistry() = default;
  explicit NodeRegistry(const std::vector<NodeSpec>& specs);

  NodeRegistry(const NodeRegistry&) = delete;
  NodeRegistry& operator=(const NodeRegistry&) = delete;

  void add(std::string id, std::unique_ptr<ChunkTransport> transport);
  void set_alive(const std::string& id, bool alive);
  bool alive(const std::string& id) const;

  std::vector<NodeInfo> nodes() const;          // registration order
  std::vector<std::string> alive_ids() const;   // registration order
  std::size_t size() const;

  // nullptr for an unknown id. The transport outlives the registry entry.
  ChunkTransport* transport(const std::string& id) const;

 private:
  struct Entry {
    std::string id;
    std::unique_ptr<ChunkTransport> transport;
    bool alive = true;
  };

  const Entry* find(const std::string& id) const;

  mutable std::shared_mutex mu_;
  std::vector<Entry> entries_;
};

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_NODE_H_
