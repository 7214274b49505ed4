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

#include "sigma/insec/insec_client.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "sigma/insec/modbus_client.hpp"

namespace sigma::insec {

namespace {

using SteadyClock = std::chrono::steady_clock;

std::int64_t elapsed_ns(SteadyClock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(SteadyClock::now() - since).count();
}

core::RawScalar to_raw(const core::DataVariant& v) {
  return std::visit(
      [](const auto& x) -> core::RawScalar {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, float> || std::is_same_v<T, double>) {
          return static_cast<double>(x);
        } else if constexpr (std::is_same_v<T, core::DateTime>) {
          return core::EpochNanos{x.ns};
        } else {
          return static_cast<std::int64_t>(x);
        }
      },
      v);
}

constexpr int kMaxDepth = 64;

}  // namespace

void validate(const InsecEndpointConfig& c) {
  if (c.poll_interval_ms < 1) throw ConfigError(c.alias.str() + ": pollIntervalMs must be at least 1");
  if (c.endpoint.port == 0) throw ConfigError(c.alias.str() + ": endpoint port must be non-zero");
  if (c.protocol == Protocol::ModbusTcp) {
    std::set<core::NodeId> ids;
    for (const auto& b : c.registers) {
      modbus::validate_binding(b);
      if (b.node_id.ns() != 1) {
        throw ConfigError(c.alias.str() + ": register node " + b.node_id.to_string() + " must use namespace 1");
      }
      if (!ids.insert(b.node_id).second) {
        throw ConfigError(c.alias.str() + ": duplicate register node " + b.node_id.to_string());
      }
    }
  }
}

std::string_view phase_name(Phase phase) noexcept {
  switch (phase) {
    case Phase::Connecting: return "Connecting";
    case Phase::Discovering: return "Discovering";
    case Phase::Polling: return "Polling";
    case Phase::Reconnecting: return "Reconnecting";
    case Phase::Stopped: return "Stopped";
  }
  return "?";
}

bool ClientState::allowed(Phase from, Phase to) noexcept {
  if (from == Phase::Stopped) return false;
  if (to == Phase::Stopped || to == Phase::Reconnecting) return from != to;
  return (from == Phase::Connecting && to == Phase::Discovering) ||
         (from == Phase::Discovering && to == Phase::Polling) ||
         (from == Phase::Reconnecting && to == Phase::Connecting);
}

void ClientState::transition(Phase to) {
  if (!allowed(phase_, to)) {
    throw std::logic_error("illegal transition " + std::string(phase_name(phase_)) + " -> " +
                           std::string(phase_name(to)));
  }
  phase_ = to;
}

DeviceStructure discover_structure(snap::SnapClient& client, const InsecEndpointConfig& config) {
  DeviceStructure out;
  out.table.uris = client.read_namespace_array();
  for (std::size_t i = 0; i < out.table.uris.size(); ++i) {
    spdlog::info("{}:{} -> {}", config.alias.str(), i, out.table.uris[i]);
  }

  const core::NodeId root(0, core::kObjectsFolderId);
  std::vector<core::NodeId> selected = config.nodes;
  if (config.select_all) {
    selected.clear();
    std::vector<core::NodeId> queue{root};
    std::set<core::NodeId> seen{root};
    while (!queue.empty()) {
      const auto node = queue.back();
      queue.pop_back();
      for (const auto& child : client.browse(node).children) {
        if (!seen.insert(child.node).second) continue;
        if (client.attributes(child.node).node_class == snap::NodeClass::Variable) {
          selected.push_back(child.node);
        } else {
          queue.push_back(child.node);
        }
      }
    }
    std::sort(selected.begin(), selected.end());
  }

  for (const auto& node : selected) {
    snap::NodeAttributes attrs;
    try {
      attrs = client.attributes(node);
    } catch (const snap::StatusError& e) {
      if (e.code() == snap::ErrorCode::BadNodeUnknown) {
        throw StructuralError(config.alias.str() + ": node " + node.to_string() + " does not exist on the device");
      }
      throw;
    }
    if (attrs.node_class != snap::NodeClass::Variable) {
      throw StructuralError(config.alias.str() + ": node " + node.to_string() + " is not a variable");
    }
    if (!attrs.data_kind) {
      throw StructuralError(config.alias.str() + ": node " + node.to_string() + " has unsupported data type '" +
                            attrs.data_type_name + "'");
    }

    std::vector<std::string> segments{attrs.browse_name};
    core::NodeId cursor = node;
    for (int depth = 0;; ++depth) {
      if (depth > kMaxDepth) {
        throw StructuralError(config.alias.str() + ": browse path of " + node.to_string() + " does not terminate");
      }
      const auto browse = client.browse(cursor);
      if (!browse.parent) {
        throw StructuralError(config.alias.str() + ": orphan node " + node.to_string() +
                              " has no path to the Objects folder");
      }
      if (browse.parent->node == root) break;
      segments.push_back(browse.parent->browse_name);
      cursor = browse.parent->node;
    }
    std::reverse(segments.begin(), segments.end());

    core::NodeDescriptor d;
    d.node_id = node;
    d.display_name = attrs.display_name;
    d.description = attrs.description;
    d.data_kind = *attrs.data_kind;
    d.browse_name = attrs.browse_name;
    d.browse_path = core::assemble_browse_path(config.alias, segments);
    out.nodes.push_back(std::move(d));
  }
  return out;
}

DeviceStructure synthesize_modbus_structure(const InsecEndpointConfig& config) {
  DeviceStructure out;
  out.table.uris = {std::string(core::kStandardNamespaceUri), "urn:sigma:modbus:" + config.alias.str()};
  std::set<core::NodeId> ids;
  for (const auto& b : config.registers) {
    if (!ids.insert(b.node_id).second) {
      throw ConfigError(config.alias.str() + ": duplicate register node " + b.node_id.to_string());
    }
    core::NodeDescriptor d;
    d.node_id = b.node_id;
    d.display_name = b.browse_name;
    d.description = "holding register " + std::to_string(b.address) + " x " + b.scale.to_string();
    d.data_kind = b.target_kind;
    d.browse_name = b.browse_name;
    const std::vector<std::string> segments{"Registers", b.browse_name};
    d.browse_path = core::assemble_browse_path(config.alias, segments);
    out.nodes.push_back(std::move(d));
  }
  return out;
}

std::vector<RegisterRun> plan_register_runs(const std::vector<modbus::RegisterBinding>& bindings) {
  std::vector<std::size_t> order(bindings.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bindings[a].address < bindings[b].address; });
  std::vector<RegisterRun> runs;
  for (const std::size_t i : order) {
    const std::uint16_t addr = bindings[i].address;
    if (!runs.empty()) {
      auto& last = runs.back();
      const std::uint32_t end = std::uint32_t{last.start} + last.quantity;
      if (addr < end) {
        last.bindings.push_back(i);
        continue;
      }
      if (addr == end && last.quantity < modbus::kMaxReadQuantity) {
        ++last.quantity;
        last.bindings.push_back(i);
        continue;
      }
    }
    runs.push_back({addr, 1, {i}});
  }
  return runs;
}

std::int64_t WorkerClock::next() {
  const std::int64_t now =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count();
  last_ = std::max(now, last_ + 1);
  return last_;
}

CycleResult poll_snap_cycle(snap::SnapClient& client, const InsecEndpointConfig& config,
                            const std::vector<core::NodeDescriptor>& nodes, store::StoreWriter& writer,
                            WorkerClock& clock, store::LatencyProbe* probe) {
  CycleResult result;
  for (const auto& d : nodes) {
    core::DataVariant wire;
    try {
      wire = client.read(d.node_id).value.variant;
    } catch (const snap::StatusError& e) {
      spdlog::debug("{}: read {} failed: {}", config.alias.str(), d.node_id.to_string(), e.what());
      ++result.failed;
      continue;
    }
    const auto arrived = SteadyClock::now();
    try {
      const auto key = core::make_store_key(config.alias, d.node_id);
      const std::int64_t ts = clock.next();
      writer.put_value(key, core::DataValue{core::normalize_raw(to_raw(wire), d.data_kind), ts});
      if (probe) probe->record_write(key.str(), ts, elapsed_ns(arrived));
      ++result.written;
    } catch (const ConversionError& e) {
      spdlog::warn("{}: value of {} rejected: {}", config.alias.str(), d.node_id.to_string(), e.what());
      ++result.failed;
    }
  }
  return result;
}

CycleResult poll_modbus_cycle(ModbusClient& client, const InsecEndpointConfig& config,
                              const std::vector<RegisterRun>& runs, store::StoreWriter& writer, WorkerClock& clock,
                              store::LatencyProbe* probe) {
  CycleResult result;
  for (const auto& run : runs) {
    const auto reply = client.read(config.unit_id, run.start, run.quantity);
    const auto arrived = SteadyClock::now();
    if (const auto* ex = std::get_if<modbus::ExceptionResponse>(&reply)) {
      spdlog::debug("{}: registers {}+{} answered with exception {}", config.alias.str(), run.start, run.quantity,
                    ex->exception_code);
      result.failed += run.bindings.size();
      continue;
    }
    const auto& regs = std::get<std::vector<std::uint16_t>>(reply);
    for (const std::size_t i : run.bindings) {
      const auto& b = config.registers[i];
      try {
        const auto key = core::make_store_key(config.alias, b.node_id);
        const std::int64_t ts = clock.next();
        writer.put_value(key, core::DataValue{modbus::apply_binding(regs[b.address - run.start], b), ts});
        if (probe) probe->record_write(key.str(), ts, elapsed_ns(arrived));
        ++result.written;
      } catch (const ConversionError& e) {
        spdlog::warn("{}: register {} rejected: {}", config.alias.str(), b.address, e.what());
        ++result.failed;
      }
    }
  }
  return result;
}

InsecClient::InsecClient(InsecEndpointConfig config, store::StoreWriter writer, Options options)
    : config_(std::move(config)), writer_(std::move(writer)), options_(options) {
  validate(config_);
}

void InsecClient::start() {
  thread_ = std::jthread([this](std::stop_token stop) { run(stop); });
}

void InsecClient::stop() {
  if (!thread_.joinable()) return;
  thread_.request_stop();
  {
    std::lock_guard lock(state_mutex_);
    if (active_) active_->shutdown();
  }
  wake_.notify_all();
  thread_.join();
}

Phase InsecClient::phase() const {
  std::lock_guard lock(state_mutex_);
  return state_.phase();
}

void InsecClient::set_phase(Phase to) {
  std::lock_guard lock(state_mutex_);
  if (state_.phase() != to) state_.transition(to);
}

void InsecClient::set_active(net::Stream* stream) {
  std::lock_guard lock(state_mutex_);
  active_ = stream;
}

bool InsecClient::sleep_until(SteadyClock::time_point deadline, std::stop_token stop) {
  std::unique_lock lock(state_mutex_);
  wake_.wait_until(lock, stop, deadline, [] { return false; });
  return !stop.stop_requested();
}

void InsecClient::run(std::stop_token stop) {
  const auto interval = std::chrono::milliseconds(config_.poll_interval_ms);
  while (!stop.stop_requested()) {
    try {
      session(stop);
    } catch (const Error& e) {
      if (stop.stop_requested()) break;
      ++connection_failures_;
      spdlog::warn("{}: {}; reconnecting", config_.alias.str(), e.what());
    }
    set_active(nullptr);
    if (stop.stop_requested()) break;
    set_phase(Phase::Reconnecting);
    {
      std::lock_guard lock(state_mutex_);
      state_.record_failure();
    }
    if (!sleep_until(SteadyClock::now() + interval, stop)) break;
    set_phase(Phase::Connecting);
  }
  set_active(nullptr);
  set_phase(Phase::Stopped);
}

void InsecClient::session(std::stop_token stop) {
  // Cleared before the connection object goes away so stop() never touches a dead stream.
  struct ActiveGuard {
    InsecClient* self;
    ~ActiveGuard() { self->set_active(nullptr); }
  };
  const auto interval = std::chrono::milliseconds(config_.poll_interval_ms);
  const auto poll_loop = [&](auto&& cycle) {
    {
      std::lock_guard lock(state_mutex_);
      state_.transition(Phase::Polling);
      state_.reset_failures();
    }
    auto next = SteadyClock::now();
    while (!stop.stop_requested()) {
      const auto started = SteadyClock::now();
      const CycleResult r = cycle();
      ++cycles_;
      read_failures_ += r.failed;
      // An overrun starts the next cycle immediately.
      next = std::max(started + interval, SteadyClock::now());
      if (!sleep_until(next, stop)) return;
    }
  };

  if (config_.protocol == Protocol::SnapLegacy) {
    auto client = snap::SnapClient::connect_plain(config_.endpoint, options_.io_timeout);
    set_active(&client.channel().stream());
    const ActiveGuard guard{this};
    if (stop.stop_requested()) return;
    set_phase(Phase::Discovering);
    const auto structure = discover_structure(client, config_);
    writer_.put_structure(config_.alias, structure.table, structure.nodes);
    poll_loop([&] { return poll_snap_cycle(client, config_, structure.nodes, writer_, clock_, options_.probe); });
  } else {
    auto client = ModbusClient::connect(config_.endpoint, options_.io_timeout);
    set_active(&client.stream());
    const ActiveGuard guard{this};
    if (stop.stop_requested()) return;
    set_phase(Phase::Discovering);
    const auto structure = synthesize_modbus_structure(config_);
    writer_.put_structure(config_.alias, structure.table, structure.nodes);
    const auto runs = plan_register_runs(config_.registers);
    poll_loop([&] { return poll_modbus_cycle(client, config_, runs, writer_, clock_, options_.probe); });
  }
}

}  // namespace sigma::insec
