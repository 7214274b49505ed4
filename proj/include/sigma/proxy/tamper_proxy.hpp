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
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sigma/modbus/codec.hpp"
#include "sigma/net/server.hpp"

namespace sigma::proxy {

/// Replaces one holding register in every 0x03 response that covers it.
struct TamperRule {
  std::uint16_t match_address = 0;
  std::uint16_t replacement = 0;

  /// "ADDR=VALUE"; throws ConfigError.
  static TamperRule parse(const std::string& text);
  bool operator==(const TamperRule&) const = default;
};

/// Request windows by transaction id, learnt from the client direction.
class TransactionTracker {
 public:
  /// Feeds client→server bytes; incomplete frames are kept for the next call.
  void observe_requests(std::span<const std::uint8_t> bytes);
  /// Removes and returns the window of a transaction, if known.
  std::optional<modbus::ReadHoldingRegsRequest> take(std::uint16_t transaction_id);

 private:
  std::vector<std::uint8_t> buffer_;
  std::map<std::uint16_t, modbus::ReadHoldingRegsRequest> pending_;
  bool passthrough_ = false;
};

/// Rewrites matched registers of a complete response ADU in place (same
/// length). Returns the number of registers changed.
std::size_t apply_rules(std::vector<std::uint8_t>& response_adu, const modbus::ReadHoldingRegsRequest& window,
                        const std::vector<TamperRule>& rules);

class TamperProxy {
 public:
  TamperProxy(net::Endpoint upstream, std::vector<TamperRule> rules);
  ~TamperProxy() { stop(); }

  /// Throws StartupError.
  void start(std::uint16_t listen_port, const std::string& host = "127.0.0.1");
  void stop();
  std::uint16_t port() const noexcept { return port_; }

  std::uint64_t registers_tampered() const noexcept { return tampered_.load(); }
  std::uint64_t connections() const noexcept { return connections_.load(); }

  /// Records every relayed byte per direction (tests compare against a direct run).
  void set_capture(bool enabled);
  std::vector<std::uint8_t> captured_to_upstream() const;
  std::vector<std::uint8_t> captured_to_client() const;

 private:
  void relay(net::Socket client, const net::EventFd& stop);
  void capture(bool to_upstream, std::span<const std::uint8_t> bytes);

  net::Endpoint upstream_;
  std::vector<TamperRule> rules_;
  std::unique_ptr<net::TcpServer> server_;
  std::uint16_t port_ = 0;
  std::atomic<std::uint64_t> tampered_{0};
  std::atomic<std::uint64_t> connections_{0};

  mutable std::mutex capture_mutex_;
  bool capture_ = false;
  std::vector<std::uint8_t> to_upstream_;
  std::vector<std::uint8_t> to_client_;
};

}  // namespace sigma::proxy
