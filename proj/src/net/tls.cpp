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

#include "sigma/net/tls.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <csignal>
#include <cstdio>
#include <mutex>

namespace sigma::net {

namespace fs = std::filesystem;

namespace {

SSL_CTX* as_ctx(void* p) { return static_cast<SSL_CTX*>(p); }
SSL* as_ssl(void* p) { return static_cast<SSL*>(p); }

std::string last_ssl_error() {
  const unsigned long code = ERR_get_error();
  ERR_clear_error();
  if (code == 0) return "unknown TLS error";
  char buf[256];
  ERR_error_string_n(code, buf, sizeof buf);
  return buf;
}

void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

bool is_pem(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pem" || ext == ".crt" || ext == ".cert";
}

struct FileCloser {
  void operator()(FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};

void add_extension(X509* cert, int nid, const char* value) {
  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, cert, cert, nullptr, nullptr, 0);
  X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value);
  if (!ext) throw StartupError("cannot build certificate extension: " + last_ssl_error());
  X509_add_ext(cert, ext, -1);
  X509_EXTENSION_free(ext);
}

}  // namespace

TlsContext::TlsContext(TlsContext&& other) noexcept
    : ctx_(std::exchange(other.ctx_, nullptr)),
      server_name_(std::move(other.server_name_)),
      verify_peer_(other.verify_peer_) {}

TlsContext& TlsContext::operator=(TlsContext&& other) noexcept {
  if (this != &other) {
    if (ctx_) SSL_CTX_free(as_ctx(ctx_));
    ctx_ = std::exchange(other.ctx_, nullptr);
    server_name_ = std::move(other.server_name_);
    verify_peer_ = other.verify_peer_;
  }
  return *this;
}

TlsContext::~TlsContext() {
  if (ctx_) SSL_CTX_free(as_ctx(ctx_));
}

TlsContext TlsContext::server(const ServerOptions& options) {
  ignore_sigpipe_once();
  SSL_CTX* raw = SSL_CTX_new(TLS_server_method());
  if (!raw) throw StartupError("SSL_CTX_new failed: " + last_ssl_error());
  TlsContext ctx(raw);
  SSL_CTX_set_min_proto_version(raw, TLS1_3_VERSION);

  if (!fs::exists(options.cert_file)) {
    throw StartupError("TLS certificate '" + options.cert_file.string() + "' not found");
  }
  if (!fs::exists(options.key_file)) {
    throw StartupError("TLS private key '" + options.key_file.string() + "' not found");
  }
  if (SSL_CTX_use_certificate_chain_file(raw, options.cert_file.c_str()) != 1) {
    throw StartupError("cannot load certificate '" + options.cert_file.string() + "': " + last_ssl_error());
  }
  if (SSL_CTX_use_PrivateKey_file(raw, options.key_file.c_str(), SSL_FILETYPE_PEM) != 1 ||
      SSL_CTX_check_private_key(raw) != 1) {
    throw StartupError("cannot load private key '" + options.key_file.string() + "': " + last_ssl_error());
  }

  if (options.trust_dir) {
    std::error_code ec;
    if (!fs::is_directory(*options.trust_dir, ec)) {
      throw StartupError("trust directory '" + options.trust_dir->string() + "' not found");
    }
    X509_STORE* store = SSL_CTX_get_cert_store(raw);
    int loaded = 0;
    for (const auto& entry : fs::directory_iterator(*options.trust_dir)) {
      if (!entry.is_regular_file() || !is_pem(entry.path())) continue;
      if (X509_STORE_load_file(store, entry.path().c_str()) == 1) ++loaded;
    }
    ERR_clear_error();
    if (loaded == 0) {
      throw StartupError("trust directory '" + options.trust_dir->string() + "' holds no certificates");
    }
    SSL_CTX_set_verify(raw, SSL_VERIFY_PEER | SSL_VERIFY_FAIL_IF_NO_PEER_CERT, nullptr);
    ctx.verify_peer_ = true;
  }
  return ctx;
}

TlsContext TlsContext::client(const ClientOptions& options) {
  ignore_sigpipe_once();
  SSL_CTX* raw = SSL_CTX_new(TLS_client_method());
  if (!raw) throw StartupError("SSL_CTX_new failed: " + last_ssl_error());
  TlsContext ctx(raw);
  SSL_CTX_set_min_proto_version(raw, TLS1_3_VERSION);
  if (options.ca_file) {
    if (SSL_CTX_load_verify_locations(raw, options.ca_file->c_str(), nullptr) != 1) {
      throw StartupError("cannot load CA file '" + options.ca_file->string() + "': " + last_ssl_error());
    }
    SSL_CTX_set_verify(raw, SSL_VERIFY_PEER, nullptr);
    ctx.verify_peer_ = true;
    ctx.server_name_ = options.server_name;
  }
  if (options.cert_file && options.key_file) {
    if (SSL_CTX_use_certificate_chain_file(raw, options.cert_file->c_str()) != 1 ||
        SSL_CTX_use_PrivateKey_file(raw, options.key_file->c_str(), SSL_FILETYPE_PEM) != 1) {
      throw StartupError("cannot load client certificate: " + last_ssl_error());
    }
  }
  return ctx;
}

TlsStream::~TlsStream() {
  if (ssl_) SSL_free(as_ssl(ssl_));
}

bool TlsStream::has_buffered() const { return SSL_pending(as_ssl(ssl_)) > 0; }

void TlsStream::shutdown() noexcept { socket_.shutdown(); }

std::size_t TlsStream::read_some(std::span<std::uint8_t> buffer, Millis timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (SSL_pending(as_ssl(ssl_)) == 0) {
      const auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
      if (!wait_readable(socket_.fd(), std::max(left, Millis{0}))) return 0;
    }
    const int n = SSL_read(as_ssl(ssl_), buffer.data(), static_cast<int>(buffer.size()));
    if (n > 0) return static_cast<std::size_t>(n);
    const int err = SSL_get_error(as_ssl(ssl_), n);
    if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) {
      if (std::chrono::steady_clock::now() >= deadline) return 0;
      continue;
    }
    if (err == SSL_ERROR_ZERO_RETURN) throw IoError("TLS connection closed by peer");
    throw IoError("TLS read failed: " + last_ssl_error());
  }
}

void TlsStream::write_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const int n = SSL_write(as_ssl(ssl_), bytes.data() + sent, static_cast<int>(bytes.size() - sent));
    if (n <= 0) {
      const int err = SSL_get_error(as_ssl(ssl_), n);
      if (err == SSL_ERROR_WANT_WRITE || err == SSL_ERROR_WANT_READ) continue;
      throw IoError("TLS write failed: " + last_ssl_error());
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> TlsStream::verified_peer() const {
  X509* peer = SSL_get1_peer_certificate(as_ssl(ssl_));
  if (!peer) return std::nullopt;
  std::optional<std::string> out;
  if (SSL_get_verify_result(as_ssl(ssl_)) == X509_V_OK) {
    char cn[256] = {0};
    X509_NAME_get_text_by_NID(X509_get_subject_name(peer), NID_commonName, cn, sizeof cn);
    out = cn;
  }
  X509_free(peer);
  return out;
}

std::unique_ptr<TlsStream> tls_accept(const TlsContext& ctx, Socket socket, Millis timeout) {
  socket.set_io_timeout(timeout);
  SSL* ssl = SSL_new(as_ctx(ctx.native()));
  if (!ssl) throw IoError("SSL_new failed: " + last_ssl_error());
  std::unique_ptr<TlsStream> stream(new TlsStream(std::move(socket), ssl));
  SSL_set_fd(ssl, stream->fd());
  if (SSL_accept(ssl) != 1) throw IoError("TLS handshake failed: " + last_ssl_error());
  return stream;
}

std::unique_ptr<TlsStream> tls_connect(const TlsContext& ctx, Socket socket, Millis timeout) {
  socket.set_io_timeout(timeout);
  SSL* ssl = SSL_new(as_ctx(ctx.native()));
  if (!ssl) throw IoError("SSL_new failed: " + last_ssl_error());
  std::unique_ptr<TlsStream> stream(new TlsStream(std::move(socket), ssl));
  SSL_set_fd(ssl, stream->fd());
  if (ctx.verifies_peer() && !ctx.server_name().empty()) SSL_set1_host(ssl, ctx.server_name().c_str());
  if (SSL_connect(ssl) != 1) throw IoError("TLS handshake failed: " + last_ssl_error());
  return stream;
}

void generate_self_signed(const std::string& common_name, const fs::path& cert_file, const fs::path& key_file,
                          int valid_days) {
  EVP_PKEY* key = EVP_EC_gen("P-256");
  if (!key) throw StartupError("key generation failed: " + last_ssl_error());
  X509* cert = X509_new();
  const auto cleanup = [&] {
    X509_free(cert);
    EVP_PKEY_free(key);
  };
  try {
    X509_set_version(cert, 2);
    ASN1_INTEGER_set(X509_get_serialNumber(cert), static_cast<long>(std::hash<std::string>{}(common_name) & 0x7fffffff));
    X509_gmtime_adj(X509_getm_notBefore(cert), -3600);
    X509_gmtime_adj(X509_getm_notAfter(cert), static_cast<long>(valid_days) * 86400);
    X509_set_pubkey(cert, key);
    X509_NAME* name = X509_get_subject_name(cert);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>(common_name.c_str()), -1, -1, 0);
    X509_set_issuer_name(cert, name);
    add_extension(cert, NID_basic_constraints, "critical,CA:TRUE");
    add_extension(cert, NID_key_usage, "critical,digitalSignature,keyCertSign");
    add_extension(cert, NID_subject_alt_name, "DNS:localhost,IP:127.0.0.1");
    add_extension(cert, NID_subject_key_identifier, "hash");
    if (X509_sign(cert, key, EVP_sha256()) == 0) throw StartupError("signing failed: " + last_ssl_error());

    if (cert_file.has_parent_path()) fs::create_directories(cert_file.parent_path());
    if (key_file.has_parent_path()) fs::create_directories(key_file.parent_path());
    std::unique_ptr<FILE, FileCloser> cf(std::fopen(cert_file.c_str(), "wb"));
    std::unique_ptr<FILE, FileCloser> kf(std::fopen(key_file.c_str(), "wb"));
    if (!cf || !kf) throw StartupError("cannot write certificate files");
    if (PEM_write_X509(cf.get(), cert) != 1 ||
        PEM_write_PrivateKey(kf.get(), key, nullptr, nullptr, 0, nullptr, nullptr) != 1) {
      throw StartupError("cannot write PEM: " + last_ssl_error());
    }
  } catch (...) {
    cleanup();
    throw;
  }
  cleanup();
}

}  // namespace sigma::net
