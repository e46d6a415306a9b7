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


#include "hyperfuse/chunkstore/block_server.h"

#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "hyperfuse/error.h"
#include "wire.h"

namespace hyperfuse::chunkstore {

BlockServer::BlockServer(std::filesystem::path root, std::string bind_host, std::uint16_t port)
    : store_(std::move(root)), host_(std::move(bind_host)), port_(port) {}

BlockServer::~BlockServer() { stop(); }

void BlockServer::start() {
  if (running_) return;
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port_);
  int rc = ::getaddrinfo(host_.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw Error(ErrorCode::kIoError, "resolve " + host_ + ": " + ::gai_strerror(rc));
  wire::Fd fd;
  std::string last_err = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    wire::Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (s.get() < 0) {
      last_err = std::strerror(errno);
      continue;
    }
    int one = 1;
    ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.get(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.get(), 64) == 0) {
      fd = std::move(s);
      break;
    }
    last_err = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  if (fd.get() < 0) {
    throw Error(ErrorCode::kIoError,
                "listen on " + host_ + ":" + std::to_string(port_) + ": " + last_err);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len) == 0) {
    if (addr.ss_family == AF_INET) {
      port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    } else if (addr.ss_family == AF_INET6) {
      port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    }
  }
  listen_fd_ = fd.release();
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void BlockServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  listen_fd_ = -1;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<Worker> workers;
  {
    std::lock_guard lock(conn_mu_);
    for (auto& w : workers_) {
      if (!*w.done) ::shutdown(w.fd, SHUT_RDWR);
    }
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.join();
}

void BlockServer::reap_finished() {
  std::lock_guard lock(conn_mu_);
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (*it->done) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void BlockServer::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    reap_finished();
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(conn_mu_);
    if (!running_) {
      ::close(fd);
      break;
    }
    Worker w;
    w.fd = fd;
    w.done = done;
    w.thread = std::thread([this, fd, done] {
      serve(fd);
      std::lock_guard done_lock(conn_mu_);
      ::close(fd);
      *done = true;
    });
    workers_.push_back(std::move(w));
  }
}

void BlockServer::serve(int fd) {
  std::vector<std::uint8_t> payload;
  for (;;) {
    std::uint8_t head[17];
    if (!wire::recv_all(fd, head, sizeof(head))) return;
    ChunkId id;
    std::copy(head + 1, head + 17, id.bytes.begin());
    Status status = Status::kError;
    bool send_payload = false;
    switch (static_cast<Opcode>(head[0])) {
      case Opcode::kPut: {
        std::uint8_t len_buf[8];
        if (!wire::recv_all(fd, len_buf, 8)) return;
        const std::uint64_t len = wire::get_u64le(len_buf);
        if (len > kMaxWirePayload) {
          const auto s = static_cast<std::uint8_t>(Status::kError);
          wire::send_all(fd, &s, 1);
          return;  // the stream cannot be resynchronised
        }
        payload.resize(static_cast<std::size_t>(len));
        if (len > 0 && !wire::recv_all(fd, payload.data(), payload.size())) return;
        std::lock_guard lock(store_mu_);
        status = store_.put(id, payload);
        break;
      }
      case Opcode::kGet: {
        std::lock_guard lock(store_mu_);
        status = store_.get(id, payload);
        send_payload = status == Status::kOk;
        break;
      }
      case Opcode::kDelete: {
        std::lock_guard lock(store_mu_);
        status = store_.remove(id);
        break;
      }
      case Opcode::kPing:
        status = Status::kOk;
        break;
      default: {
        const auto s = static_cast<std::uint8_t>(Status::kError);
        wire::send_all(fd, &s, 1);
        return;
      }
    }
    std::uint8_t reply[9];
    reply[0] = static_cast<std::uint8_t>(status);
    std::size_t reply_len = 1;
    if (send_payload) {
      wire::put_u64le(reply + 1, payload.size());
      reply_len = 9;
    }
    if (!wire::send_all(fd, reply, reply_len)) return;
    if (send_payload && !payload.empty() && !wire::send_all(fd, payload.data(), payload.size())) {
      return;
    }
  }
}

}  // namespace hyperfuse::chunkstore
