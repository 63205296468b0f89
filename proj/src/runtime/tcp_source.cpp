// Copyright 2026 The hcmon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "hcmon/runner.hpp"

namespace hcmon::runtime {

namespace {

constexpr int kPollMillis = 200;

bool stopped(const std::atomic<bool>* stop) { return stop != nullptr && stop->load(); }

/// Waits until `fd` is readable; false if `stop` was raised first.
bool wait_readable(int fd, const std::atomic<bool>* stop) {
  pollfd p{fd, POLLIN, 0};
  while (!stopped(stop)) {
    const int rc = ::poll(&p, 1, kPollMillis);
    if (rc > 0) return true;
    if (rc < 0 && errno != EINTR) throw std::runtime_error(std::strerror(errno));
  }
  return false;
}

}  // namespace

TcpSource::TcpSource(const std::string& host, std::uint16_t port, std::size_t max_segments,
                     const std::atomic<bool>* stop)
    : max_segments_(max_segments), stop_(stop) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(),
                                   &hints, &res);
      rc != 0) {
    throw std::runtime_error("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    ::freeaddrinfo(res);
    throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const bool bound = ::bind(listen_fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!bound || ::listen(listen_fd_, 4) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on " + host + ":" + service + ": " + err);
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpSource::~TcpSource() {
  if (conn_fd_ >= 0) ::close(conn_fd_);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool TcpSource::fill() {
  char chunk[4096];
  while (true) {
    if (conn_fd_ < 0) {
      if (max_segments_ != 0 && segments_ >= max_segments_) return false;
      if (!wait_readable(listen_fd_, stop_)) return false;
      conn_fd_ = ::accept(listen_fd_, nullptr, nullptr);
      if (conn_fd_ < 0) continue;
      ++segments_;
    }
    if (!wait_readable(conn_fd_, stop_)) return false;
    const ssize_t n = ::read(conn_fd_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
      return true;
    }
    if (n < 0 && errno == EINTR) continue;
    // Peer closed: a final unterminated line still counts.
    ::close(conn_fd_);
    conn_fd_ = -1;
    if (!buffer_.empty()) buffer_ += '\n';
    return true;
  }
}

bool TcpSource::next(std::string& line) {
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    if (!fill()) return false;
  }
}

}  // namespace hcmon::runtime
