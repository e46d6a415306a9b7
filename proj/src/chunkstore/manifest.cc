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


#include "hyperfuse/chunkstore/manifest.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperfuse/error.h"

namespace hyperfuse::chunkstore {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kManifestParseError, "line " + std::to_string(line) + ": " + msg);
}

std::size_t parse_size(const std::string& tok, std::size_t line, const char* what) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    fail(line, std::string("bad ") + what + " '" + tok + "'");
  }
  return v;
}

std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

bool valid_manifest_token(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](unsigned char c) {
    return c <= ' ' || c == ',' || c == 0x7f;
  });
}

void ChunkManifest::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kManifestParseError, msg); };
  if (!valid_manifest_token(file_name)) bad("file name must be non-empty without spaces or commas");
  if (chunk_size == 0) bad("chunk_size is 0");
  if (replication == 0) bad("replication is 0");
  const std::size_t expected = (file_size + chunk_size - 1) / chunk_size;
  if (chunks.size() != expected) {
    bad("expected " + std::to_string(expected) + " chunks, found " + std::to_string(chunks.size()));
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    const bool last = i + 1 == chunks.size();
    if (c.length == 0 || c.length > chunk_size || (!last && c.length != chunk_size)) {
      bad("chunk " + std::to_string(i) + " has length " + std::to_string(c.length));
    }
    total += c.length;
    if (c.placements.empty() || c.placements.size() > replication) {
      bad("chunk " + std::to_string(i) + " has " + std::to_string(c.placements.size()) +
          " placements");
    }
    std::set<std::string> seen;
    for (const auto& p : c.placements) {
      if (!valid_manifest_token(p)) bad("bad node id '" + p + "'");
      if (!seen.insert(p).second) bad("chunk " + std::to_string(i) + " placed twice on " + p);
    }
  }
  if (total != file_size) {
    bad("chunk lengths sum to " + std::to_string(total) + ", file size is " +
        std::to_string(file_size));
  }
}

std::string format_manifest(const ChunkManifest& m) {
  m.validate();
  std::ostringstream out;
  out << "file " << m.file_name << ' ' << m.file_size << ' ' << m.chunk_size << ' '
      << m.replication << '\n';
  for (const auto& c : m.chunks) {
    out << "chunk " << c.id.hex() << ' ' << c.length << ' ' << crc_hex(c.crc) << ' ';
    for (std::size_t k = 0; k < c.placements.size(); ++k) {
      if (k) out << ',';
      out << c.placements[k];
    }
    out << '\n';
  }
  return out.str();
}

ChunkManifest parse_manifest(const std::string& text) {
  ChunkManifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_file = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto words = split_words(line);
    if (words.empty()) continue;
    if (words[0] == "file") {
      if (have_file) fail(lineno, "duplicate file line");
      if (words.size() != 5) fail(lineno, "file line needs 4 fields");
      m.file_name = words[1];
      m.file_size = parse_size(words[2], lineno, "size");
      m.chunk_size = parse_size(words[3], lineno, "chunk size");
      m.replication = parse_size(words[4], lineno, "replication");
      have_file = true;
    } else if (words[0] == "chunk") {
      if (!have_file) fail(lineno, "chunk line before file line");
      if (words.size() != 5) fail(lineno, "chunk line needs 4 fields");
      ChunkRecord c;
      try {
        c.id = ChunkId::from_hex(words[1]);
        c.crc = parse_crc_hex(words[3]);
      } catch (const Error& e) {
        fail(lineno, e.what());
      }
      c.length = parse_size(words[2], lineno, "length");
      std::size_t pos = 0;
      const std::string& nodes = words[4];
      while (pos <= nodes.size()) {
        std::size_t comma = nodes.find(',', pos);
        if (comma == std::string::npos) comma = nodes.size();
        c.placements.push_back(nodes.substr(pos, comma - pos));
        pos = comma + 1;
      }
      m.chunks.push_back(std::move(c));
    } else {
      fail(lineno, "unknown record '" + words[0] + "'");
    }
  }
  if (!have_file) throw Error(ErrorCode::kManifestParseError, "missing file line");
  m.validate();
  return m;
}

void save_manifest(const ChunkManifest& m, const std::filesystem::path& path) {
  const std::string text = format_manifest(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

ChunkManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

}  // namespace hyperfuse::chunkstore
