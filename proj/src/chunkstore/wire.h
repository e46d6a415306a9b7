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


// Socket plumbing shared by the TCP transport and the block server.

#ifndef HYPERFUSE_SRC_CHUNKSTORE_WIRE_H_
#define HYPERFUSE_SRC_CHUNKSTORE_WIRE_H_

#include <cstddef>
#include <cstdint>
#include <string>

namespace hyperfuse::chunkstore::wire {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() { reset(); }
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = o.release();
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;

  int get() const { return fd_; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void reset();

 private:
  int fd_ = -1;
};

// Throws Error(IoError) when the peer cannot be reached.
Fd connect_to(const std::string& host, std::uint16_t port);

// false on EOF or error.
bool send_all(int fd, const void* data, std::size_t n);
bool recv_all(int fd, void* data, std::size_t n);

void put_u64le(std::uint8_t* dst, std::uint64_t v);
std::uint64_t get_u64le(const std::uint8_t* src);

}  // namespace hyperfuse::chunkstore::wire

#endif  // HYPERFUSE_SRC_CHUNKSTORE_WIRE_H_
