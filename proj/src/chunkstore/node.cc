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


#include "hyperfuse/chunkstore/node.h"

#include <charconv>
#include <fstream>
#include <mutex>
#include <set>
#include <system_error>

#include "hyperfuse/chunkstore/block_server.h"
#include "hyperfuse/error.h"
#include "wire.h"

namespace hyperfuse::chunkstore {

namespace fs = std::filesystem;

std::string_view status_name(Status s) {
  switch (s) {
    case Status::kOk: return "OK";
    case Status::kNotFound: return "NOT_FOUND";
    case Status::kCrcFail: return "CRC_FAIL";
    case Status::kError: return "ERROR";
  }
  return "UNKNOWN";
}

// --- DirStore ---------------------------------------------------------------

namespace {

bool write_whole(const fs::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  return static_cast<bool>(out);
}

bool read_whole(const fs::path& path, std::vector<std::uint8_t>& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  if (size < 0) return false;
  out.resize(static_cast<std::size_t>(size));
  return size == 0 || static_cast<bool>(in.read(reinterpret_cast<char*>(out.data()), size));
}

}  // namespace

DirStore::DirStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw Error(ErrorCode::kIoError, "cannot create node directory " + root_.string());
  }
}

fs::path DirStore::chunk_path(const ChunkId& id) const { return root_ / (id.hex() + ".chunk"); }
fs::path DirStore::crc_path(const ChunkId& id) const { return root_ / (id.hex() + ".crc"); }

Status DirStore::put(const ChunkId& id, ByteSpan payload) {
  const fs::path chunk = chunk_path(id);
  const fs::path crc = crc_path(id);
  const fs::path chunk_tmp = chunk.string() + ".tmp";
  const fs::path crc_tmp = crc.string() + ".tmp";
  const std::string crc_text = crc_hex(crc32(payload)) + "\n";
  if (!write_whole(chunk_tmp, payload.data(), payload.size()) ||
      !write_whole(crc_tmp, crc_text.data(), crc_text.size())) {
    return Status::kError;
  }
  std::error_code ec;
  fs::rename(crc_tmp, crc, ec);
  if (!ec) fs::rename(chunk_tmp, chunk, ec);
  return ec ? Status::kError : Status::kOk;
}

Status DirStore::get(const ChunkId& id, std::vector<std::uint8_t>& out) const {
  const fs::path chunk = chunk_path(id);
  std::error_code ec;
  if (!fs::exists(chunk, ec)) return ec ? Status::kError : Status::kNotFound;
  std::vector<std::uint8_t> crc_text;
  if (!read_whole(chunk, out) || !read_whole(crc_path(id), crc_text)) return Status::kError;
  std::string_view sv(reinterpret_cast<const char*>(crc_text.data()), crc_text.size());
  while (!sv.empty() && (sv.back() == '\n' || sv.back() == '\r')) sv.remove_suffix(1);
  std::uint32_t stored = 0;
  try {
    stored = parse_crc_hex(sv);
  } catch (const Error&) {
    return Status::kError;
  }
  return stored == crc32(out) ? Status::kOk : Status::kCrcFail;
}

Status DirStore::remove(const ChunkId& id) {
  std::error_code ec1, ec2;
  const bool had_chunk = fs::remove(chunk_path(id), ec1);
  fs::remove(crc_path(id), ec2);
  if (ec1 || ec2) return Status::kError;
  return had_chunk ? Status::kOk : Status::kNotFound;
}

bool DirTransport::ping() {
  std::error_code ec;
  return fs::is_directory(store_.root(), ec);
}

// --- TcpTransport -----------------------------------------------------------

namespace {

// Sends one request and reads the status byte; on GET OK also reads the
// payload into `out`.
Status round_trip(const std::string& host, std::uint16_t port, std::uint8_t op,
                  const ChunkId& id, ByteSpan payload, std::vector<std::uint8_t>* out) {
  wire::Fd fd = wire::connect_to(host, port);
  const std::string where = host + ":" + std::to_string(port);
  std::uint8_t head[1 + 16 + 8];
  head[0] = op;
  std::copy(id.bytes.begin(), id.bytes.end(), head + 1);
  std::size_t head_len = 17;
  if (op == 0x01) {
    wire::put_u64le(head + 17, payload.size());
    head_len = 25;
  }
  if (!wire::send_all(fd.get(), head, head_len) ||
      (op == 0x01 && !wire::send_all(fd.get(), payload.data(), payload.size()))) {
    throw Error(ErrorCode::kIoError, "send to " + where + " failed");
  }
  std::uint8_t status = 0;
  if (!wire::recv_all(fd.get(), &status, 1)) {
    throw Error(ErrorCode::kIoError, "no reply from " + where);
  }
  if (status > 3) {
    throw Error(ErrorCode::kProtocolError, "bad status byte from " + where);
  }
  if (op == 0x02 && status == 0) {
    std::uint8_t len_buf[8];
    if (!wire::recv_all(fd.get(), len_buf, 8)) {
      throw Error(ErrorCode::kIoError, "truncated reply from " + where);
    }
    const std::uint64_t len = wire::get_u64le(len_buf);
    if (len > kMaxWirePayload) {
      throw Error(ErrorCode::kProtocolError, "oversized payload from " + where);
    }
    out->resize(static_cast<std::size_t>(len));
    if (len > 0 && !wire::recv_all(fd.get(), out->data(), out->size())) {
      throw Error(ErrorCode::kIoError, "truncated payload from " + where);
    }
  }
  return static_cast<Status>(status);
}

}  // namespace

Status TcpTransport::put(const ChunkId& id, ByteSpan payload) {
  return round_trip(host_, port_, static_cast<std::uint8_t>(Opcode::kPut), id, payload, nullptr);
}

Status TcpTransport::get(const ChunkId& id, std::vector<std::uint8_t>& out) {
  return round_trip(host_, port_, static_cast<std::uint8_t>(Opcode::kGet), id, {}, &out);
}

Status TcpTransport::remove(const ChunkId& id) {
  return round_trip(host_, port_, static_cast<std::uint8_t>(Opcode::kDelete), id, {}, nullptr);
}

bool TcpTransport::ping() {
  try {
    return round_trip(host_, port_, static_cast<std::uint8_t>(Opcode::kPing), ChunkId{}, {},
                      nullptr) == Status::kOk;
  } catch (const Error&) {
    return false;
  }
}

std::string TcpTransport::describe() const {
  return "tcp:" + host_ + ":" + std::to_string(port_);
}

// --- NodeSpec ---------------------------------------------------------------

std::string NodeSpec::to_string() const {
  if (kind == Kind::kDir) return id + "=dir:" + path;
  return id + "=tcp:" + host + ":" + std::to_string(port);
}

std::vector<NodeSpec> parse_node_specs(const std::string& text) {
  std::vector<NodeSpec> out;
  std::set<std::string> ids;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    pos = comma + 1;
    auto bad = [&](const std::string& why) {
      throw Error(ErrorCode::kInvalidArgument, "node spec '" + item + "': " + why);
    };
    NodeSpec spec;
    std::string body = item;
    const auto eq = item.find('=');
    const auto colon = item.find(':');
    if (eq != std::string::npos && (colon == std::string::npos || eq < colon)) {
      spec.id = item.substr(0, eq);
      body = item.substr(eq + 1);
      if (spec.id.empty()) bad("empty node id");
      for (unsigned char c : spec.id) {
        if (c <= ' ' || c == ',') bad("node id may not contain spaces or commas");
      }
    } else {
      spec.id = "n" + std::to_string(out.size());
    }
    if (body.rfind("dir:", 0) == 0) {
      spec.kind = NodeSpec::Kind::kDir;
      spec.path = body.substr(4);
      if (spec.path.empty()) bad("empty directory");
    } else if (body.rfind("tcp:", 0) == 0) {
      spec.kind = NodeSpec::Kind::kTcp;
      const std::string addr = body.substr(4);
      const auto last = addr.rfind(':');
      if (last == std::string::npos || last == 0) bad("want tcp:host:port");
      spec.host = addr.substr(0, last);
      const std::string port = addr.substr(last + 1);
      unsigned v = 0;
      auto res = std::from_chars(port.data(), port.data() + port.size(), v);
      if (port.empty() || res.ec != std::errc() || res.ptr != port.data() + port.size() ||
          v == 0 || v > 65535) {
        bad("bad port '" + port + "'");
      }
      spec.port = static_cast<std::uint16_t>(v);
    } else {
      bad("want dir:<path> or tcp:<host>:<port>");
    }
    if (!ids.insert(spec.id).second) bad("duplicate node id '" + spec.id + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

// --- NodeRegistry -----------------------------------------------------------

NodeRegistry::NodeRegistry(const std::vector<NodeSpec>& specs) {
  for (const auto& s : specs) {
    if (s.kind == NodeSpec::Kind::kDir) {
      add(s.id, std::make_unique<DirTransport>(s.path));
    } else {
      add(s.id, std::make_unique<TcpTransport>(s.host, s.port));
    }
  }
}

void NodeRegistry::add(std::string id, std::unique_ptr<ChunkTransport> transport) {
  if (!transport) throw Error(ErrorCode::kInvalidArgument, "null transport for " + id);
  std::unique_lock lock(mu_);
  for (const auto& e : entries_) {
    if (e.id == id) throw Error(ErrorCode::kInvalidArgument, "duplicate node id '" + id + "'");
  }
  entries_.push_back(Entry{std::move(id), std::move(transport), true});
}

const NodeRegistry::Entry* NodeRegistry::find(const std::string& id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void NodeRegistry::set_alive(const std::string& id, bool alive) {
  std::unique_lock lock(mu_);
  for (auto& e : entries_) {
    if (e.id == id) {
      e.alive = alive;
      return;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown node '" + id + "'");
}

bool NodeRegistry::alive(const std::string& id) const {
  std::shared_lock lock(mu_);
  const Entry* e = find(id);
  return e != nullptr && e->alive;
}

std::vector<NodeInfo> NodeRegistry::nodes() const {
  std::shared_lock lock(mu_);
  std::vector<NodeInfo> out;
  for (const auto& e : entries_) out.push_back({e.id, e.transport->describe(), e.alive});
  return out;
}

std::vector<std::string> NodeRegistry::alive_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.alive) out.push_back(e.id);
  }
  return out;
}

std::size_t NodeRegistry::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

ChunkTransport* NodeRegistry::transport(const std::string& id) const {
  std::shared_lock lock(mu_);
  const Entry* e = find(id);
  return e ? e->transport.get() : nullptr;
}

}  // namespace hyperfuse::chunkstore
