/*
 * Copyright 2026 The Gridweave Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "gridweave/federation.hpp"

namespace gridweave {

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::write_all(std::span<const std::uint8_t> bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("PeerDisconnect", std::string("PeerDisconnect: send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

bool Socket::read_exact(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::recv(fd_, out.data() + done, out.size() - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("PeerDisconnect", std::string("PeerDisconnect: recv failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (done == 0) return false;
      throw Error("Truncated", "Truncated: connection closed inside a frame");
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

std::pair<Socket, Socket> socket_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error("TransportError", std::string("socketpair: ") + std::strerror(errno));
  }
  return {Socket(fds[0]), Socket(fds[1])};
}

namespace {

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw Error("TransportError", "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  return result;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// Non-blocking connect bounded by `timeout`; invalid Socket on failure.
Socket try_connect(const addrinfo& addr, std::chrono::milliseconds timeout) {
  Socket sock(::socket(addr.ai_family, addr.ai_socktype, addr.ai_protocol));
  if (!sock.valid()) return {};
  int flags = ::fcntl(sock.fd(), F_GETFL, 0);
  ::fcntl(sock.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(sock.fd(), addr.ai_addr, addr.ai_addrlen);
  if (rc != 0 && errno != EINPROGRESS) return {};
  if (rc != 0) {
    pollfd pfd{sock.fd(), POLLOUT, 0};
    if (::poll(&pfd, 1, static_cast<int>(timeout.count())) != 1) return {};
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) return {};
  }
  ::fcntl(sock.fd(), F_SETFL, flags);
  set_nodelay(sock.fd());
  return sock;
}

}  // namespace

Socket connect_with_retry(const std::string& host, std::uint16_t port, std::chrono::milliseconds attempt_timeout,
                          int retries, std::chrono::milliseconds backoff) {
  addrinfo* addrs = resolve(host, port, false);
  for (int attempt = 0; attempt <= retries; ++attempt) {
    for (addrinfo* a = addrs; a != nullptr; a = a->ai_next) {
      Socket sock = try_connect(*a, attempt_timeout);
      if (sock.valid()) {
        ::freeaddrinfo(addrs);
        return sock;
      }
    }
    if (attempt < retries) std::this_thread::sleep_for(backoff);
  }
  ::freeaddrinfo(addrs);
  throw Error("PeerDisconnect", "PeerDisconnect: cannot connect to " + host + ":" + std::to_string(port));
}

Listener::Listener(const std::string& host, std::uint16_t port) {
  addrinfo* addrs = resolve(host, port, true);
  for (addrinfo* a = addrs; a != nullptr; a = a->ai_next) {
    Socket sock(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
    if (!sock.valid()) continue;
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(sock.fd(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(sock.fd(), 16) == 0) {
      socket_ = std::move(sock);
      break;
    }
  }
  ::freeaddrinfo(addrs);
  if (!socket_.valid()) {
    throw Error("TransportError", "cannot listen on " + host + ":" + std::to_string(port) + ": " +
                                      std::strerror(errno));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(socket_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{socket_.fd(), POLLIN, 0};
  int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc != 1) throw Error("PeerDisconnect", "PeerDisconnect: no peer connected in time");
  Socket sock(::accept(socket_.fd(), nullptr, nullptr));
  if (!sock.valid()) throw Error("PeerDisconnect", std::string("PeerDisconnect: accept: ") + std::strerror(errno));
  set_nodelay(sock.fd());
  return sock;
}

std::optional<Frame> read_frame(Socket& socket) {
  std::vector<std::uint8_t> buf(4);
  if (!socket.read_exact(buf)) return std::nullopt;
  const std::size_t n =
      (std::size_t{buf[0]} << 24) | (std::size_t{buf[1]} << 16) | (std::size_t{buf[2]} << 8) | std::size_t{buf[3]};
  if (n == 0 || n > kMaxFrameBytes) throw Error("BadLength", "BadLength: prefix " + std::to_string(n));
  buf.resize(4 + n);
  if (!socket.read_exact(std::span(buf).subspan(4))) throw Error("Truncated", "Truncated: closed after prefix");
  return decode_frame(buf);
}

}  // namespace gridweave
