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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sigma/net/socket.hpp"

namespace sigma::net {

/// TLS 1.3 only.
class TlsContext {
 public:
  struct ServerOptions {
    std::filesystem::path cert_file;
    std::filesystem::path key_file;
    /// When set, clients must present a certificate that verifies against
    /// one of the PEM certificates in this directory.
    std::optional<std::filesystem::path> trust_dir;
  };
  struct ClientOptions {
    /// PEM file(s) trusted for the server certificate. Empty: no verification.
    std::optional<std::filesystem::path> ca_file;
    /// Expected server name (DNS or IP SAN) when ca_file is set.
    std::string server_name = "localhost";
    std::optional<std::filesystem::path> cert_file;
    std::optional<std::filesystem::path> key_file;
  };

  /// Throws StartupError when key material is missing or unusable.
  static TlsContext server(const ServerOptions& options);
  static TlsContext client(const ClientOptions& options);

  TlsContext(TlsContext&&) noexcept;
  TlsContext& operator=(TlsContext&&) noexcept;
  ~TlsContext();

  void* native() const noexcept { return ctx_; }
  const std::string& server_name() const noexcept { return server_name_; }
  bool verifies_peer() const noexcept { return verify_peer_; }

 private:
  explicit TlsContext(void* ctx) : ctx_(ctx) {}
  void* ctx_ = nullptr;
  std::string server_name_;
  bool verify_peer_ = false;
};

class TlsStream final : public Stream {
 public:
  ~TlsStream() override;

  std::size_t read_some(std::span<std::uint8_t> buffer, Millis timeout) override;
  void write_all(std::span<const std::uint8_t> bytes) override;
  int fd() const noexcept override { return socket_.fd(); }
  bool has_buffered() const override;
  void shutdown() noexcept override;

  /// Subject CN of a verified peer certificate, if any.
  std::optional<std::string> verified_peer() const;

 private:
  friend std::unique_ptr<TlsStream> tls_accept(const TlsContext&, Socket, Millis);
  friend std::unique_ptr<TlsStream> tls_connect(const TlsContext&, Socket, Millis);
  TlsStream(Socket socket, void* ssl) : socket_(std::move(socket)), ssl_(ssl) {}

  Socket socket_;
  void* ssl_ = nullptr;
};

/// Server-side handshake; throws IoError on any TLS failure.
std::unique_ptr<TlsStream> tls_accept(const TlsContext& ctx, Socket socket, Millis timeout);
/// Client-side handshake; throws IoError on any TLS failure.
std::unique_ptr<TlsStream> tls_connect(const TlsContext& ctx, Socket socket, Millis timeout);

/// Writes a self-signed EC P-256 certificate (SAN localhost, 127.0.0.1) and
/// its private key as PEM. Used for tests, benchmarks and first-run setups.
void generate_self_signed(const std::string& common_name, const std::filesystem::path& cert_file,
                          const std::filesystem::path& key_file, int valid_days = 365);

}  // namespace sigma::net
