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


#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "hyperfuse/chunkstore/bench.h"
#include "hyperfuse/chunkstore/block_server.h"
#include "hyperfuse/chunkstore/chunk.h"
#include "hyperfuse/chunkstore/manifest.h"
#include "hyperfuse/chunkstore/node.h"
#include "hyperfuse/chunkstore/store.h"
#include "hyperfuse/error.h"
#include "hyperfuse/rng.h"
#include "support/oracles.h"
#include "support/temp_dir.h"

using namespace hyperfuse;
using namespace hyperfuse::chunkstore;
using testing_support::TempDir;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kUsageError;
}

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = static_cast<std::uint8_t>(rng.next());
  return v;
}

// n directory nodes n0..n{n-1} under `root`.
std::unique_ptr<NodeRegistry> dir_nodes(const std::filesystem::path& root, std::size_t n) {
  auto reg = std::make_unique<NodeRegistry>();
  for (std::size_t k = 0; k < n; ++k)
    reg->add("n" + std::to_string(k),
             std::make_unique<DirTransport>(root / ("n" + std::to_string(k))));
  return reg;
}

std::size_t count_files(const std::filesystem::path& dir, const std::string& ext) {
  if (!std::filesystem::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ext) ++n;
  return n;
}

void flip_byte(const std::filesystem::path& p) {
  std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
  char c;
  f.seekg(0);
  f.get(c);
  f.seekp(0);
  f.put(static_cast<char>(c ^ 0x5a));
}

// Blocking client for raw protocol tests.
class RawConn {
 public:
  explicit RawConn(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  }
  ~RawConn() { ::close(fd_); }

  void send(const std::vector<std::uint8_t>& bytes) {
    REQUIRE(::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL) ==
            static_cast<ssize_t>(bytes.size()));
  }
  // Returns fewer bytes than asked only when the peer closed.
  std::vector<std::uint8_t> recv(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    std::size_t got = 0;
    while (got < n) {
      ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
      if (r <= 0) break;
      got += static_cast<std::size_t>(r);
    }
    out.resize(got);
    return out;
  }

 private:
  int fd_ = -1;
};

std::vector<std::uint8_t> request(std::uint8_t op, const ChunkId& id) {
  std::vector<std::uint8_t> v(1 + id.bytes.size(), op);
  std::copy(id.bytes.begin(), id.bytes.end(), v.begin() + 1);
  return v;
}

void append_u64(std::vector<std::uint8_t>& v, std::uint64_t x) {
  for (int k = 0; k < 8; ++k) v.push_back(static_cast<std::uint8_t>(x >> (8 * k)));
}

}  // namespace

TEST_CASE("crc32 matches the bitwise oracle and the check value") {
  const std::string check = "123456789";
  ByteSpan s(reinterpret_cast<const std::uint8_t*>(check.data()), check.size());
  CHECK(crc32(s) == 0xCBF43926u);
  CHECK(crc_hex(crc32(s)) == "cbf43926");
  CHECK(crc32({}) == 0u);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto bytes = random_bytes(seed * 37, seed);
    CHECK(crc32(bytes) == oracle::crc32(bytes.data(), bytes.size()));
  }
  CHECK(parse_crc_hex("cbf43926") == 0xCBF43926u);
  CHECK(code_of([] { parse_crc_hex("cbf4392"); }) == ErrorCode::kManifestParseError);
  CHECK(code_of([] { parse_crc_hex("cbf4392g"); }) == ErrorCode::kManifestParseError);
}

TEST_CASE("chunk ids") {
  ChunkId a = ChunkId::derive(0, "f", 4, 0);
  CHECK(a.hex().size() == 32);
  CHECK(ChunkId::from_hex(a.hex()) == a);
  CHECK(ChunkId::derive(0, "f", 4, 0) == a);
  std::set<ChunkId> ids;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    for (std::string name : {"a", "b", "ab"})
      for (std::size_t cs : {4u, 8u})
        for (std::size_t i = 0; i < 10; ++i) ids.insert(ChunkId::derive(seed, name, cs, i));
  CHECK(ids.size() == 3 * 3 * 2 * 10);
  CHECK_THROWS_AS(ChunkId::from_hex("00"), Error);
  CHECK_THROWS_AS(ChunkId::from_hex(std::string(32, 'z')), Error);
}

TEST_CASE("ten bytes in chunks of four") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  std::vector<std::uint8_t> data = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ChunkManifest m = put("ten", data, {.chunk_size = 4, .replication = 2, .seed = 0}, *reg);
  REQUIRE(m.chunks.size() == 3);
  CHECK(m.chunks[0].length == 4);
  CHECK(m.chunks[1].length == 4);
  CHECK(m.chunks[2].length == 2);
  CHECK(m.file_size == 10);
  CHECK(m.chunks[2].crc == oracle::crc32(data.data() + 8, 2));
  for (const auto& c : m.chunks) {
    REQUIRE(c.placements.size() == 2);
    CHECK(c.placements[0] != c.placements[1]);
  }
  CHECK(get(m, *reg) == data);
}

TEST_CASE("chunk counts and round trips across sizes") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 4);
  for (std::size_t n : {0u, 1u, 4095u, 4096u, 4097u, 20000u}) {
    auto data = random_bytes(n, n);
    ChunkManifest m =
        put("f" + std::to_string(n), data, {.chunk_size = 4096, .replication = 3, .seed = 1}, *reg);
    CHECK(m.chunks.size() == (n + 4095) / 4096);
    CHECK_NOTHROW(m.validate());
    CHECK(get(m, *reg) == data);
  }
}

TEST_CASE("placement is round-robin over alive nodes") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 5);
  auto data = random_bytes(10 * 100, 2);
  ChunkManifest m = put("rr", data, {.chunk_size = 100, .replication = 3, .seed = 4}, *reg);
  auto pos = [](const std::string& id) { return std::stoul(id.substr(1)); };
  const std::size_t offset = pos(m.chunks[0].placements[0]);
  for (std::size_t i = 0; i < m.chunks.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(pos(m.chunks[i].placements[k]) == (offset + i + k) % 5);

  // Replication above the alive count places one copy per alive node.
  reg->set_alive("n1", false);
  reg->set_alive("n2", false);
  ChunkManifest few = put("few", data, {.chunk_size = 100, .replication = 5, .seed = 4}, *reg);
  for (const auto& c : few.chunks) {
    CHECK(c.placements.size() == 3);
    for (const auto& p : c.placements) CHECK((p != "n1" && p != "n2"));
  }
}

TEST_CASE("replica files land on the placed nodes only") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  auto data = random_bytes(9, 3);
  ChunkManifest m = put("x", data, {.chunk_size = 3, .replication = 2, .seed = 0}, *reg);
  std::map<std::string, std::size_t> per_node;
  for (const auto& c : m.chunks)
    for (const auto& p : c.placements) ++per_node[p];
  for (const auto& [node, n] : per_node) {
    CHECK(count_files(tmp / node, ".chunk") == n);
    CHECK(count_files(tmp / node, ".crc") == n);
  }
}

TEST_CASE("get fails over to another replica") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  auto data = random_bytes(5000, 4);
  ChunkManifest m = put("fo", data, {.chunk_size = 1000, .replication = 2, .seed = 0}, *reg);

  SUBCASE("dead node") {
    reg->set_alive("n0", false);
    CHECK(get(m, *reg) == data);
  }
  SUBCASE("missing replica") {
    for (const auto& c : m.chunks)
      std::filesystem::remove(tmp / c.placements[0] / (c.id.hex() + ".chunk"));
    CHECK(get(m, *reg) == data);
  }
  SUBCASE("corrupt replica") {
    for (const auto& c : m.chunks) flip_byte(tmp / c.placements[0] / (c.id.hex() + ".chunk"));
    CHECK(get(m, *reg) == data);
  }
  SUBCASE("every replica corrupt") {
    const auto& c = m.chunks[2];
    for (const auto& p : c.placements) flip_byte(tmp / p / (c.id.hex() + ".chunk"));
    CHECK(code_of([&] { get(m, *reg); }) == ErrorCode::kChecksumMismatch);
  }
  SUBCASE("no replica reachable") {
    for (const auto& p : m.chunks[1].placements) reg->set_alive(p, false);
    CHECK(code_of([&] { get(m, *reg); }) == ErrorCode::kChunkUnavailable);
  }
  SUBCASE("manifest crc disagrees with consistent replicas") {
    ChunkManifest bad = m;
    bad.chunks[0].crc ^= 1;
    CHECK(code_of([&] { get(bad, *reg); }) == ErrorCode::kChecksumMismatch);
  }
}

TEST_CASE("delete removes every replica and is idempotent") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  auto data = random_bytes(3000, 5);
  ChunkManifest m = put("del", data, {.chunk_size = 1000, .replication = 2, .seed = 0}, *reg);
  DeleteReport r1 = remove(m, *reg);
  CHECK(r1.removed == 6);
  CHECK(r1.missing == 0);
  for (std::string n : {"n0", "n1", "n2"}) {
    CHECK(count_files(tmp / n, ".chunk") == 0);
    CHECK(count_files(tmp / n, ".crc") == 0);
  }
  DeleteReport r2 = remove(m, *reg);
  CHECK(r2.removed == 0);
  CHECK(r2.missing == 6);
  CHECK(code_of([&] { get(m, *reg); }) == ErrorCode::kChunkUnavailable);

  ChunkManifest again = put("del", data, {.chunk_size = 1000, .replication = 2, .seed = 0}, *reg);
  reg->set_alive("n1", false);
  DeleteReport r3 = remove(again, *reg);
  CHECK(r3.skipped_dead == 2);
  CHECK(r3.removed == 4);
}

TEST_CASE("put errors") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 2);
  auto data = random_bytes(10, 6);
  CHECK(code_of([&] { put("z", data, {.chunk_size = 0}, *reg); }) == ErrorCode::kZeroChunkSize);
  CHECK(code_of([&] { put("z", data, {.replication = 0}, *reg); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { put("bad name", data, {}, *reg); }) == ErrorCode::kInvalidArgument);
  reg->set_alive("n0", false);
  reg->set_alive("n1", false);
  CHECK(code_of([&] { put("z", data, {}, *reg); }) == ErrorCode::kNoAliveNodes);
  NodeRegistry empty;
  CHECK(code_of([&] { put("z", data, {}, empty); }) == ErrorCode::kNoAliveNodes);
}

TEST_CASE("manifest text round trip and invariants") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  auto data = random_bytes(2500, 7);
  ChunkManifest m = put("man.bin", data, {.chunk_size = 1000, .replication = 2, .seed = 9}, *reg);
  std::string text = format_manifest(m);
  CHECK(text.rfind("file man.bin 2500 1000 2\nchunk ", 0) == 0);
  CHECK(parse_manifest(text) == m);
  save_manifest(m, tmp / "m.txt");
  CHECK(load_manifest(tmp / "m.txt") == m);

  auto broken = [&](auto mutate) {
    ChunkManifest b = m;
    mutate(b);
    return code_of([&] { parse_manifest(format_manifest(b)); });
  };
  CHECK(broken([](ChunkManifest& b) { b.file_size = 2501; }) == ErrorCode::kManifestParseError);
  CHECK(broken([](ChunkManifest& b) { b.chunks[0].length = 999; }) ==
        ErrorCode::kManifestParseError);
  CHECK(broken([](ChunkManifest& b) { b.chunks[1].placements = {"n0", "n0"}; }) ==
        ErrorCode::kManifestParseError);
  CHECK(broken([](ChunkManifest& b) { b.chunks[1].placements = {"n0", "n1", "n2"}; }) ==
        ErrorCode::kManifestParseError);
  CHECK(code_of([] { parse_manifest("file a 1 1\n"); }) == ErrorCode::kManifestParseError);
  CHECK(code_of([] { parse_manifest(""); }) == ErrorCode::kManifestParseError);
  CHECK(code_of([&] { load_manifest(tmp / "none"); }) == ErrorCode::kMissingFile);
}

TEST_CASE("node spec parsing") {
  auto specs = parse_node_specs("dir:/a,b=tcp:127.0.0.1:9000,dir:rel");
  REQUIRE(specs.size() == 3);
  CHECK(specs[0].id == "n0");
  CHECK(specs[0].kind == NodeSpec::Kind::kDir);
  CHECK(specs[0].path == "/a");
  CHECK(specs[1].id == "b");
  CHECK(specs[1].kind == NodeSpec::Kind::kTcp);
  CHECK(specs[1].host == "127.0.0.1");
  CHECK(specs[1].port == 9000);
  CHECK(specs[2].id == "n2");
  CHECK(parse_node_specs(specs[1].to_string())[0].port == 9000);
  CHECK_THROWS_AS(parse_node_specs("x=dir:/a,x=dir:/b"), Error);
  CHECK_THROWS_AS(parse_node_specs("ftp:/a"), Error);
  CHECK_THROWS_AS(parse_node_specs("tcp:host"), Error);
  CHECK_THROWS_AS(parse_node_specs("tcp:host:99999"), Error);
  CHECK_THROWS_AS(parse_node_specs(""), Error);
}

TEST_CASE("registry liveness") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  CHECK(reg->size() == 3);
  reg->set_alive("n1", false);
  CHECK_FALSE(reg->alive("n1"));
  CHECK(reg->alive_ids() == std::vector<std::string>{"n0", "n2"});
  CHECK(reg->transport("nope") == nullptr);
  CHECK_THROWS_AS(reg->set_alive("nope", false), Error);
  CHECK_THROWS_AS(reg->add("n0", std::make_unique<DirTransport>(tmp / "x")), Error);
}

TEST_CASE("dir store detects sidecar mismatch") {
  TempDir tmp;
  DirStore store(tmp.path());
  ChunkId id = ChunkId::derive(0, "s", 1, 0);
  std::vector<std::uint8_t> payload = {1, 2, 3};
  CHECK(store.put(id, payload) == Status::kOk);
  std::vector<std::uint8_t> out;
  CHECK(store.get(id, out) == Status::kOk);
  CHECK(out == payload);
  flip_byte(store.chunk_path(id));
  CHECK(store.get(id, out) == Status::kCrcFail);
  CHECK(store.remove(id) == Status::kOk);
  CHECK(store.remove(id) == Status::kNotFound);
  CHECK(store.get(id, out) == Status::kNotFound);
}

TEST_CASE("block server over TCP") {
  TempDir tmp;
  BlockServer s0(tmp / "s0"), s1(tmp / "s1");
  s0.start();
  s1.start();
  NodeRegistry reg;
  reg.add("a", std::make_unique<TcpTransport>("127.0.0.1", s0.port()));
  reg.add("b", std::make_unique<TcpTransport>("127.0.0.1", s1.port()));
  CHECK(reg.transport("a")->ping());

  auto data = random_bytes(100000, 8);
  ChunkManifest m = put("net", data, {.chunk_size = 16384, .replication = 2, .seed = 0}, reg);
  CHECK(get(m, reg) == data);

  // Corrupt s0's copy of chunk 0; the client falls back to s1.
  flip_byte(DirStore(tmp / "s0").chunk_path(m.chunks[0].id));
  CHECK(get(m, reg) == data);

  s0.stop();
  CHECK_FALSE(reg.transport("a")->ping());
  CHECK(get(m, reg) == data);  // unreachable node is skipped

  DeleteReport r = remove(m, reg);
  CHECK(r.removed == m.chunks.size());
  s1.stop();
}

TEST_CASE("raw protocol") {
  TempDir tmp;
  BlockServer server(tmp / "raw");
  server.start();
  ChunkId id = ChunkId::derive(1, "raw", 8, 0);
  RawConn conn(server.port());

  conn.send(request(0x04, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{0});

  conn.send(request(0x02, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{1});  // NOT_FOUND

  auto put_req = request(0x01, id);
  append_u64(put_req, 3);
  put_req.insert(put_req.end(), {7, 8, 9});
  conn.send(put_req);
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{0});

  conn.send(request(0x02, id));
  auto resp = conn.recv(1 + 8 + 3);
  CHECK(resp == std::vector<std::uint8_t>{0, 3, 0, 0, 0, 0, 0, 0, 0, 7, 8, 9});

  flip_byte(DirStore(tmp / "raw").chunk_path(id));
  conn.send(request(0x02, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{2});  // CRC_FAIL

  conn.send(request(0x03, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{0});
  conn.send(request(0x03, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{1});

  // Unknown opcode: ERROR and the connection is dropped.
  conn.send(request(0x7f, id));
  CHECK(conn.recv(1) == std::vector<std::uint8_t>{3});
  CHECK(conn.recv(1).empty());

  // Oversized announcement is refused.
  RawConn big(server.port());
  auto huge = request(0x01, id);
  append_u64(huge, kMaxWirePayload + 1);
  big.send(huge);
  CHECK(big.recv(1) == std::vector<std::uint8_t>{3});
  server.stop();
}

TEST_CASE("concurrent clients") {
  TempDir tmp;
  BlockServer server(tmp / "c");
  server.start();
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      NodeRegistry reg;
      reg.add("s", std::make_unique<TcpTransport>("127.0.0.1", server.port()));
      auto data = random_bytes(20000 + t, 100 + t);
      ChunkManifest m = put("c" + std::to_string(t), data,
                            {.chunk_size = 4096, .replication = 1, .seed = 0}, reg);
      if (get(m, reg) == data) ++ok;
    });
  for (auto& th : threads) th.join();
  CHECK(ok == 8);
  server.stop();
}

TEST_CASE("bench report and CSV") {
  TempDir tmp;
  auto reg = dir_nodes(tmp.path(), 3);
  auto data = random_bytes(50000, 10);
  BenchOptions opts;
  opts.chunk_sizes = {4096, 16384, 65536};
  opts.trials = 4;
  std::size_t parsed = 0;
  opts.parse = [&](ByteSpan s) { parsed += s.size(); };
  BenchReport rep = bench_download(data, opts, *reg);
  REQUIRE(rep.results.size() == 3);
  CHECK(parsed == 3 * 4 * data.size());
  CHECK(rep.results[0].chunk_count == 13);
  CHECK(rep.results[2].chunk_count == 1);

  std::vector<double> all;
  std::size_t best = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& r = rep.results[k];
    CHECK(r.trials.size() == 4);
    CHECK(r.mean_s == doctest::Approx(oracle::mean(r.trials)).epsilon(1e-12));
    CHECK(r.std_s == doctest::Approx(oracle::sample_std(r.trials)).epsilon(1e-12));
    all.insert(all.end(), r.trials.begin(), r.trials.end());
    if (r.mean_s < rep.results[best].mean_s) best = k;
  }
  CHECK(rep.overall_std_s == doctest::Approx(oracle::sample_std(all)));
  CHECK(rep.best_chunk_size == rep.results[best].chunk_size);
  // Benchmark data is deleted afterwards.
  for (std::string n : {"n0", "n1", "n2"}) CHECK(count_files(tmp / n, ".chunk") == 0);

  // Recompute every summary row from the trial rows of the CSV.
  std::string csv = format_bench_csv(rep, {"note one"});
  CHECK(csv.rfind("# note one\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::map<std::string, std::vector<double>> trials;
  std::map<std::pair<std::string, std::string>, double> summary;
  std::vector<double> every;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line == "chunk_size_bytes,trial,seconds") continue;
    std::istringstream ls(line);
    std::string a, b, c;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, c, ',');
    if (std::isdigit(static_cast<unsigned char>(b[0]))) {
      CHECK(std::stoul(b) == trials[a].size() + 1);
      trials[a].push_back(std::stod(c));
      every.push_back(std::stod(c));
      ++rows;
    } else {
      summary[{a, b}] = std::stod(c);
    }
  }
  CHECK(rows == 12);
  for (const auto& [size, t] : trials) {
    CHECK(std::fabs(summary.at({size, "mean"}) - oracle::mean(t)) <= 1e-9);
    CHECK(std::fabs(summary.at({size, "std"}) - oracle::sample_std(t)) <= 1e-9);
  }
  CHECK(std::fabs(summary.at({"all", "std"}) - oracle::sample_std(every)) <= 1e-9);
  const std::string best_key = std::to_string(rep.best_chunk_size);
  CHECK(summary.count({best_key, "argmin_mean"}) == 1);
  for (const auto& [size, t] : trials)
    CHECK(summary.at({best_key, "mean"}) <= summary.at({size, "mean"}));
}

TEST_CASE("summary helpers") {
  CHECK(mean_of({}) == 0);
  CHECK(sample_std_of({3.0}) == 0);
  CHECK(sample_std_of({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(oracle::sample_std({1, 2, 3, 4})));
  auto sizes = default_chunk_sizes();
  CHECK(sizes == std::vector<std::size_t>{4096, 16384, 32768, 65536, 131072, 1048576, 10485760,
                                          104857600});
}
