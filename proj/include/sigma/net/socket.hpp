// Copyright 2026 The sigma-bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "sigma/core/errors.hpp"

namespace sigma::net {

using Millis = std::chrono::milliseconds;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port"; throws ConfigError.
  static Endpoint parse(const std::string& text);
  std::string to_string() const { return host + ":" + std::to_string(port); }

  bool operator==(const Endpoint&) const = default;
};

/// Owning file descriptor of a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close() noexcept;
  /// Shuts down both directions; wakes up a thread blocked on the socket.
  void shutdown() noexcept;
  /// Applies SO_RCVTIMEO / SO_SNDTIMEO.
  void set_io_timeout(Millis timeout) const;
  void set_nodelay() const;
  std::uint16_t local_port() const;

 private:
  int fd_ = -1;
};

/// Waits until `fd` is readable. With `wake_fd` >= 0 also returns when that
/// descriptor becomes readable. Returns false on timeout.
bool wait_readable(int fd, Millis timeout, int wake_fd = -1);

/// Connects with a timeout; throws IoError.
Socket connect_tcp(const Endpoint& to, Millis timeout);

/// Listening socket. The port is bound at construction; connections are
/// refused until listen() is called.
class TcpListener {
 public:
  /// Throws StartupError naming the port when binding fails. Port 0 picks a free one.
  TcpListener(const std::string& host, std::uint16_t port);

  void listen(int backlog = 64);
  bool listening() const noexcept { return listening_; }
  /// nullopt on timeout or after close().
  std::optional<Socket> accept(Millis timeout);
  std::uint16_t port() const noexcept { return port_; }
  int fd() const noexcept { return socket_.fd(); }
  void close() noexcept { socket_.close(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
  bool listening_ = false;
};

/// Byte stream over plaintext or TLS.
class Stream {
 public:
  virtual ~Stream() = default;

  /// Reads at least one byte; returns 0 when nothing arrived within
  /// `timeout`. Throws IoError on EOF or failure.
  virtual std::size_t read_some(std::span<std::uint8_t> buffer, Millis timeout) = 0;
  /// Throws IoError.
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
  virtual int fd() const noexcept = 0;
  /// Bytes already decrypted and waiting inside the stream.
  virtual bool has_buffered() const { return false; }
  virtual void shutdown() noexcept = 0;
};

class PlainStream final : public Stream {
 public:
  explicit PlainStream(Socket socket) : socket_(std::move(socket)) {}

  std::size_t read_some(std::span<std::uint8_t> buffer, Millis timeout) override;
  void write_all(std::span<const std::uint8_t> bytes) override;
  int fd() const noexcept override { return socket_.fd(); }
  void shutdown() noexcept override { socket_.shutdown(); }

 private:
  Socket socket_;
};

/// Writes all bytes to a raw descriptor; throws IoError.
void write_all_fd(int fd, std::span<const std::uint8_t> bytes);

}  // namespace sigma::net
