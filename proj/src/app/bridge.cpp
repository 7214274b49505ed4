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

#include "sigma/app/bridge.hpp"

#include <spdlog/spdlog.h>

namespace sigma::app {

Bridge::Bridge(Configs configs) : configs_(std::move(configs)) {
  store_ = store::DataStore::create({configs_.server.mirror_root});
  if (configs_.server.instrumentation) probe_ = std::make_unique<store::LatencyProbe>();
  for (const auto& d : configs_.client.devices) {
    clients_.push_back(std::make_unique<insec::InsecClient>(d, store_->writer(),
                                                            insec::InsecClient::Options{net::Millis{1000}, probe_.get()}));
  }
  for (const auto& s : configs_.server.servers) {
    sec::SecServer::Options options;
    options.probe = probe_.get();
    servers_.push_back(std::make_unique<sec::SecServer>(s, store_->reader(), options));
  }
}

void Bridge::start() {
  if (started_) return;
  started_ = true;
  for (auto& s : servers_) s->start();
  for (auto& c : clients_) c->start();
  spdlog::info("bridge started: {} device worker(s), {} secure endpoint(s)", clients_.size(), servers_.size());
}

void Bridge::stop() {
  if (!started_) return;
  started_ = false;
  for (auto& s : servers_) s->stop();
  for (auto& c : clients_) c->stop();
  for (const auto& d : configs_.client.devices) {
    try {
      if (store_->reader().snapshot_structure(d.alias)) store_->writer().mirror_write(d.alias);
    } catch (const Error& e) {
      spdlog::warn("{}: final mirror write failed: {}", d.alias.str(), e.what());
    }
  }
  spdlog::info("bridge stopped");
}

bool Bridge::wait_serving(std::chrono::milliseconds timeout) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (const auto& s : servers_) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (s->wait_ready(std::max(left, std::chrono::milliseconds(0))) != sec::SecServer::Status::Serving) return false;
  }
  return true;
}

std::string Bridge::failure() const {
  for (const auto& s : servers_) {
    if (s->status() == sec::SecServer::Status::Failed) return s->failure();
  }
  return {};
}

}  // namespace sigma::app
