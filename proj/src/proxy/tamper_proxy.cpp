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

#include "sigma/proxy/tamper_proxy.hpp"

#include <poll.h>

#include <array>
#include <charconv>

#include <spdlog/spdlog.h>

namespace sigma::proxy {

namespace {

std::uint16_t parse_u16(std::string_view text, const std::string& whole) {
  unsigned value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty() || value > 0xFFFF) {
    throw ConfigError("invalid tamper rule '" + whole + "': expected ADDR=VALUE with 16-bit integers");
  }
  return static_cast<std::uint16_t>(value);
}

std::size_t take_frame(std::vector<std::uint8_t>& buffer) {
  const auto size = modbus::frame_size(buffer);
  if (std::holds_alternative<modbus::ProtocolViolation>(size)) return SIZE_MAX;
  const std::size_t n = std::get<std::size_t>(size);
  return n != 0 && buffer.size() >= n ? n : 0;
}

}  // namespace

TamperRule TamperRule::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("invalid tamper rule '" + text + "': missing '='");
  return {parse_u16(std::string_view(text).substr(0, eq), text), parse_u16(std::string_view(text).substr(eq + 1), text)};
}

void TransactionTracker::observe_requests(std::span<const std::uint8_t> bytes) {
  if (passthrough_) return;
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  for (;;) {
    const std::size_t n = take_frame(buffer_);
    if (n == SIZE_MAX) {
      // Not Modbus; stop interpreting this connection.
      passthrough_ = true;
      buffer_.clear();
      return;
    }
    if (n == 0) return;
    const auto decoded = modbus::decode_request(std::span<const std::uint8_t>(buffer_.data(), n));
    if (const auto* req = std::get_if<modbus::ReadRequestFrame>(&decoded)) pending_[req->transaction_id] = req->request;
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
  }
}

std::optional<modbus::ReadHoldingRegsRequest> TransactionTracker::take(std::uint16_t transaction_id) {
  auto it = pending_.find(transaction_id);
  if (it == pending_.end()) return std::nullopt;
  auto window = it->second;
  pending_.erase(it);
  return window;
}

std::size_t apply_rules(std::vector<std::uint8_t>& adu, const modbus::ReadHoldingRegsRequest& window,
                        const std::vector<TamperRule>& rules) {
  // MBAP (7) + function code + byte count, then big-endian registers.
  if (adu.size() < 9 || adu[7] != modbus::kReadHoldingRegisters) return 0;
  const std::size_t count = adu[8] / 2u;
  if (adu.size() != 9 + 2 * count) return 0;
  std::size_t changed = 0;
  for (const auto& rule : rules) {
    if (rule.match_address < window.start_address) continue;
    const std::size_t index = rule.match_address - window.start_address;
    if (index >= window.quantity || index >= count) continue;
    adu[9 + 2 * index] = static_cast<std::uint8_t>(rule.replacement >> 8);
    adu[10 + 2 * index] = static_cast<std::uint8_t>(rule.replacement & 0xFF);
    ++changed;
  }
  return changed;
}

TamperProxy::TamperProxy(net::Endpoint upstream, std::vector<TamperRule> rules)
    : upstream_(std::move(upstream)), rules_(std::move(rules)) {}

void TamperProxy::start(std::uint16_t listen_port, const std::string& host) {
  server_ = std::make_unique<net::TcpServer>(host, listen_port);
  port_ = server_->port();
  server_->start([this](net::Socket s, const net::EventFd& stop) { relay(std::move(s), stop); });
}

void TamperProxy::stop() {
  if (server_) server_->stop();
  server_.reset();
}

void TamperProxy::set_capture(bool enabled) {
  std::lock_guard lock(capture_mutex_);
  capture_ = enabled;
  to_upstream_.clear();
  to_client_.clear();
}

std::vector<std::uint8_t> TamperProxy::captured_to_upstream() const {
  std::lock_guard lock(capture_mutex_);
  return to_upstream_;
}

std::vector<std::uint8_t> TamperProxy::captured_to_client() const {
  std::lock_guard lock(capture_mutex_);
  return to_client_;
}

void TamperProxy::capture(bool to_upstream, std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(capture_mutex_);
  if (!capture_) return;
  auto& sink = to_upstream ? to_upstream_ : to_client_;
  sink.insert(sink.end(), bytes.begin(), bytes.end());
}

void TamperProxy::relay(net::Socket client_socket, const net::EventFd& stop) {
  net::Socket upstream_socket;
  try {
    upstream_socket = net::connect_tcp(upstream_, net::Millis{2000});
  } catch (const Error& e) {
    spdlog::warn("tamper proxy: upstream {} unavailable: {}", upstream_.to_string(), e.what());
    return;
  }
  ++connections_;
  net::PlainStream client(std::move(client_socket));
  net::PlainStream upstream(std::move(upstream_socket));
  TransactionTracker tracker;
  std::vector<std::uint8_t> responses;
  std::array<std::uint8_t, 4096> chunk{};

  const auto forward_responses = [&] {
    for (;;) {
      const std::size_t n = take_frame(responses);
      if (n == 0) return;
      if (n == SIZE_MAX) {
        // Unparseable stream: relay what we have untouched.
        capture(false, responses);
        client.write_all(responses);
        responses.clear();
        return;
      }
      std::vector<std::uint8_t> frame(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(n));
      responses.erase(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(n));
      const std::uint16_t txn = static_cast<std::uint16_t>(frame[0] << 8 | frame[1]);
      if (auto window = tracker.take(txn)) tampered_ += apply_rules(frame, *window, rules_);
      capture(false, frame);
      client.write_all(frame);
    }
  };

  try {
    for (;;) {
      pollfd fds[3] = {{client.fd(), POLLIN, 0}, {upstream.fd(), POLLIN, 0}, {stop.fd(), POLLIN, 0}};
      if (::poll(fds, 3, -1) < 0) {
        if (errno == EINTR) continue;
        return;
      }
      if (fds[2].revents) return;
      if (fds[0].revents) {
        const std::size_t n = client.read_some(chunk, net::Millis{0});
        const std::span<const std::uint8_t> bytes(chunk.data(), n);
        if (!rules_.empty()) tracker.observe_requests(bytes);
        capture(true, bytes);
        upstream.write_all(bytes);
      }
      if (fds[1].revents) {
        const std::size_t n = upstream.read_some(chunk, net::Millis{0});
        if (rules_.empty()) {
          const std::span<const std::uint8_t> bytes(chunk.data(), n);
          capture(false, bytes);
          client.write_all(bytes);
        } else {
          responses.insert(responses.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(n));
          forward_responses();
        }
      }
    }
  } catch (const Error& e) {
    spdlog::debug("tamper proxy: relay closed: {}", e.what());
  }
}

}  // namespace sigma::proxy
