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

#include "sigma/net/server.hpp"

#include <poll.h>
#include <sys/eventfd.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

namespace sigma::net {

EventFd::EventFd() : fd_(::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK)) {
  if (fd_ < 0) throw StartupError("eventfd() failed");
}

EventFd::~EventFd() {
  if (fd_ >= 0) ::close(fd_);
}

void EventFd::signal() const noexcept {
  const std::uint64_t one = 1;
  [[maybe_unused]] auto rc = ::write(fd_, &one, sizeof one);
}

void EventFd::clear() const noexcept {
  std::uint64_t value = 0;
  [[maybe_unused]] auto rc = ::read(fd_, &value, sizeof value);
}

bool EventFd::signalled() const {
  pollfd p{fd_, POLLIN, 0};
  return ::poll(&p, 1, 0) > 0;
}

TcpServer::TcpServer(const std::string& host, std::uint16_t port) : listener_(host, port) {}

void TcpServer::start(Handler handler) {
  handler_ = std::move(handler);
  listener_.listen();
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop() {
  while (!stopped_) {
    if (!wait_readable(listener_.fd(), Millis{-1}, stop_.fd())) continue;
    if (stopped_) break;
    auto socket = listener_.accept(Millis{0});
    reap_finished();
    if (!socket) continue;
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(workers_mutex_);
    workers_.push_back(Worker{std::thread([this, s = std::move(*socket), done]() mutable {
                                try {
                                  handler_(std::move(s), stop_);
                                } catch (const std::exception& e) {
                                  spdlog::debug("connection handler on port {} ended: {}", port(), e.what());
                                }
                                done->store(true);
                              }),
                              done});
  }
}

void TcpServer::reap_finished() {
  std::lock_guard lock(workers_mutex_);
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done->load()) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpServer::stop() {
  if (stopped_.exchange(true)) return;
  stop_.signal();
  if (accept_thread_.joinable()) accept_thread_.join();
  listener_.close();
  std::list<Worker> workers;
  {
    std::lock_guard lock(workers_mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
}

std::size_t TcpServer::active_connections() const {
  std::lock_guard lock(workers_mutex_);
  std::size_t n = 0;
  for (const auto& w : workers_) n += w.done->load() ? 0 : 1;
  return n;
}

}  // namespace sigma::net
