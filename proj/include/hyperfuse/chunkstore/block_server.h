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

// TCP block server. Wire format, all integers little-endian:
//
//   request  = opcode(1) chunk-id(16) [length(8) payload]   (PUT only)
//   response = status(1) [length(8) payload]                (GET OK only)
//
// opcodes 0x01 PUT, 0x02 GET, 0x03 DELETE, 0x04 PING; status as in Status.
// A connection may carry any number of requests.

#ifndef HYPERFUSE_CHUNKSTORE_BLOCK_SERVER_H_
#define HYPERFUSE_CHUNKSTORE_BLOCK_SERVER_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hyperfuse/chunkstore/node.h"

namespace hyperfuse::chunkstore {

enum class Opcode : std::uint8_t { kPut = 0x01, kGet = 0x02, kDelete = 0x03, kPing = 0x04 };

// Largest payload a PUT may announce; anything bigger is answered with kError.
inline constexpr std::uint64_t kMaxWirePayload = std::uint64_t{1} << 31;

class BlockServer {
 public:
  // port 0 picks an ephemeral port; see port().
  BlockServer(std::filesystem::path root, std::string bind_host = "127.0.0.1",
              std::uint16_t port = 0);
  ~BlockServer();

  BlockServer(const BlockServer&) = delete;
  BlockServer& operator=(const BlockServer&) = delete;

  // Binds, listens and starts the accept thread; throws IoError.
  void start();
  // Closes the listener and every open connection, then joins all threads.
  void stop();

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }

 private:
  struct Worker {
    std::thread thread;
    int fd = -1;
    std::shared_ptr<std::atomic<bool>> done;  // set under conn_mu_ once fd is closed
  };

  void accept_loop();
  void serve(int fd);
  void reap_finished();

  DirStore store_;
  std::mutex store_mu_;
  std::string host_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::list<Worker> workers_;
};

}  // namespace hyperfuse::chunkstore

#endif  // HYPERFUSE_CHUNKSTORE_BLOCK_SERVER_H_
