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

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "sigma/net/socket.hpp"

namespace sigma::net {

/// Linux eventfd used to wake threads blocked in poll().
class EventFd {
 public:
  EventFd();
  EventFd(const EventFd&) = delete;
  EventFd& operator=(const EventFd&) = delete;
  ~EventFd();

  int fd() const noexcept { return fd_; }
  void signal() const noexcept;
  /// Consumes pending signals.
  void clear() const noexcept;
  bool signalled() const;

 private:
  int fd_ = -1;
};

/// Accept loop plus one thread per connection. Handlers should block only
/// through wait_readable(..., stop.fd()) or bounded timeouts so stop() can
/// join them.
class TcpServer {
 public:
  using Handler = std::function<void(Socket, const EventFd& stop)>;

  /// Binds immediately; throws StartupError naming the port.
  TcpServer(const std::string& host, std::uint16_t port);
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;
  ~TcpServer() { stop(); }

  /// Starts listening; connections before this call are refused.
  void start(Handler handler);
  /// Closes the listener, wakes and joins every connection thread.
  void stop();

  std::uint16_t port() const noexcept { return listener_.port(); }
  bool listening() const noexcept { return listener_.listening() && !stopped_; }
  std::size_t active_connections() const;
  const EventFd& stop_event() const noexcept { return stop_; }

 private:
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void reap_finished();

  TcpListener listener_;
  EventFd stop_;
  Handler handler_;
  std::thread accept_thread_;
  mutable std::mutex workers_mutex_;
  std::list<Worker> workers_;
  std::atomic<bool> stopped_{false};
};

}  // namespace sigma::net
