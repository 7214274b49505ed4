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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sigma/app/bridge.hpp"
#include "sigma/bench/report.hpp"
#include "sigma/bench/timing_model.hpp"
#include "sigma/modbus/codec.hpp"
#include "sigma/net/tls.hpp"
#include "sigma/proxy/tamper_proxy.hpp"
#include "sigma/sim/legacy_sim.hpp"
#include "sigma/sim/modbus_sim.hpp"
#include "sigma/store/mirror.hpp"

namespace py = pybind11;
using namespace sigma;

namespace {

py::object to_python(const core::DataVariant& v) {
  return std::visit(
      [](const auto& x) -> py::object {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, core::DateTime>) {
          return py::int_(x.ns);
        } else {
          return py::cast(x);
        }
      },
      v);
}

py::dict summary_dict(const bench::Summary& s) {
  py::dict d;
  d["count"] = s.count;
  d["min"] = s.min;
  d["max"] = s.max;
  d["mean"] = s.mean;
  d["stddev"] = s.stddev;
  d["p50"] = s.p50;
  d["p99"] = s.p99;
  return d;
}

py::dict node_dict(const core::NodeDescriptor& n) {
  py::dict d;
  d["node_id"] = n.node_id.to_string();
  d["display_name"] = n.display_name;
  d["description"] = n.description;
  d["data_type"] = std::string(core::kind_name(n.data_kind));
  d["browse_name"] = n.browse_name;
  d["browse_path"] = n.browse_path;
  return d;
}

/// Bridge assembled from the two configuration files; releases the GIL
/// while waiting.
class PyBridge {
 public:
  PyBridge(const std::filesystem::path& client, const std::filesystem::path& server)
      : bridge_(app::load_configs(client, server)) {}

  void start() { bridge_.start(); }
  void stop() {
    py::gil_scoped_release release;
    bridge_.stop();
  }
  bool wait_serving(double seconds) {
    py::gil_scoped_release release;
    return bridge_.wait_serving(std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000)));
  }
  std::string failure() const { return bridge_.failure(); }
  std::map<std::string, std::uint16_t> ports() {
    std::map<std::string, std::uint16_t> out;
    for (const auto& s : bridge_.servers()) out[s->config().alias.str()] = s->port();
    return out;
  }

 private:
  app::Bridge bridge_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the sigma-bridge core library";

  auto base = py::register_exception<Error>(m, "SigmaError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<ConversionError>(m, "ConversionError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<StartupError>(m, "StartupError", base.ptr());

  m.def(
      "encode_read_request",
      [](std::uint16_t tid, std::uint8_t unit, std::uint16_t start, std::uint16_t qty) {
        const auto b = modbus::encode_read_request(tid, unit, {start, qty});
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      },
      py::arg("transaction_id"), py::arg("unit_id"), py::arg("start"), py::arg("quantity"));

  m.def(
      "decode_response",
      [](const py::bytes& data) -> py::dict {
        const std::string s = data;
        const std::vector<std::uint8_t> bytes(s.begin(), s.end());
        py::dict d;
        const auto r = modbus::decode_response(bytes);
        if (const auto* ok = std::get_if<modbus::ReadHoldingRegsResponse>(&r)) {
          d["kind"] = "registers";
          d["transaction_id"] = ok->transaction_id;
          d["unit_id"] = ok->unit_id;
          d["registers"] = ok->registers;
        } else if (const auto* ex = std::get_if<modbus::ExceptionResponse>(&r)) {
          d["kind"] = "exception";
          d["transaction_id"] = ex->transaction_id;
          d["unit_id"] = ex->unit_id;
          d["exception_code"] = ex->exception_code;
        } else if (std::holds_alternative<modbus::NeedMoreBytes>(r)) {
          d["kind"] = "incomplete";
        } else {
          d["kind"] = "violation";
          d["reason"] = std::get<modbus::ProtocolViolation>(r).reason;
        }
        return d;
      },
      py::arg("adu"));

  m.def(
      "scale_register",
      [](std::uint16_t raw, const std::string& scale, const std::string& data_type, bool is_signed) {
        modbus::RegisterBinding b;
        b.scale = modbus::DecimalScale::parse(scale);
        const auto kind = core::parse_kind(data_type);
        if (!kind) throw ConfigError("unknown data type '" + data_type + "'");
        b.target_kind = *kind;
        b.node_id = core::NodeId(1, "value");
        b.browse_name = "value";
        b.is_signed = is_signed;
        return to_python(modbus::apply_binding(raw, b));
      },
      py::arg("raw"), py::arg("scale"), py::arg("data_type") = "Double", py::arg("signed") = false);

  m.def(
      "forwarding_delay",
      [](std::int64_t period_ns, std::int64_t transmission_ns, std::int64_t phase_ns) {
        const auto r = bench::forwarding_delay_sim({period_ns, transmission_ns, phase_ns});
        py::dict d;
        d["forwarding_delay_ns"] = r.forwarding_delay;
        d["stored_at_ns"] = r.stored_at;
        d["delivered_at_ns"] = r.delivered_at;
        d["worst_data_age_ns"] = r.worst_data_age;
        return d;
      },
      py::arg("period_ns"), py::arg("transmission_ns"), py::arg("phase_ns"));

  m.def(
      "data_age_bounds",
      [](std::int64_t period_ns, std::int64_t transmission_ns) {
        const auto b = bench::data_age_bounds(period_ns, transmission_ns);
        py::dict d;
        d["best_ns"] = b.best;
        d["worst_ns"] = b.worst;
        d["direct_ns"] = b.direct;
        return d;
      },
      py::arg("period_ns"), py::arg("transmission_ns"));

  m.def("summarize", [](std::vector<double> v) { return summary_dict(bench::summarize(std::move(v))); },
        py::arg("values"));

  m.def(
      "validate_configs",
      [](const std::filesystem::path& client, const std::filesystem::path& server) {
        const auto c = app::load_configs(client, server);
        py::dict d;
        d["devices"] = c.client.devices.size();
        d["servers"] = c.server.servers.size();
        return d;
      },
      py::arg("client_config"), py::arg("server_config"));

  m.def(
      "mirror_load",
      [](const std::filesystem::path& root, const std::string& alias) {
        const auto s = store::mirror_load(root, core::DeviceAlias(alias));
        py::dict d;
        d["namespaces"] = s.table.uris;
        py::list nodes;
        for (const auto& n : s.nodes) nodes.append(node_dict(n));
        d["nodes"] = nodes;
        return d;
      },
      py::arg("root"), py::arg("alias"));

  m.def("generate_self_signed", &net::generate_self_signed, py::arg("common_name"), py::arg("cert_file"),
        py::arg("key_file"), py::arg("valid_days") = 365);

  py::class_<sim::ModbusCoolingSim>(m, "ModbusSim")
      .def(py::init([](double celsius, double rpm, std::uint64_t seed) {
             return std::make_unique<sim::ModbusCoolingSim>(sim::ModbusFixture::cooling_constant(celsius, rpm), seed);
           }),
           py::arg("celsius") = 23.5, py::arg("rpm") = 1200.0, py::arg("seed") = 1)
      .def("start", &sim::ModbusCoolingSim::start, py::arg("port") = 0, py::arg("host") = "127.0.0.1")
      .def("stop", &sim::ModbusCoolingSim::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &sim::ModbusCoolingSim::port)
      .def("current", &sim::ModbusCoolingSim::current)
      .def("set_override", &sim::ModbusCoolingSim::set_override)
      .def("clear_overrides", &sim::ModbusCoolingSim::clear_overrides);

  py::class_<sim::LegacyNodeSim>(m, "LegacySim")
      .def(py::init([](std::uint64_t seed) {
             return std::make_unique<sim::LegacyNodeSim>(sim::LegacyFixture::plc(), seed);
           }),
           py::arg("seed") = 1)
      .def("start", &sim::LegacyNodeSim::start, py::arg("port") = 0, py::arg("host") = "127.0.0.1")
      .def("stop", &sim::LegacyNodeSim::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &sim::LegacyNodeSim::port);

  py::class_<proxy::TamperProxy>(m, "TamperProxy")
      .def(py::init([](const std::string& host, std::uint16_t port, const std::vector<std::string>& rules) {
             std::vector<proxy::TamperRule> parsed;
             for (const auto& r : rules) parsed.push_back(proxy::TamperRule::parse(r));
             return std::make_unique<proxy::TamperProxy>(net::Endpoint{host, port}, std::move(parsed));
           }),
           py::arg("upstream_host"), py::arg("upstream_port"), py::arg("rules") = std::vector<std::string>{})
      .def("start", &proxy::TamperProxy::start, py::arg("port") = 0, py::arg("host") = "127.0.0.1")
      .def("stop", &proxy::TamperProxy::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &proxy::TamperProxy::port)
      .def_property_readonly("registers_tampered", &proxy::TamperProxy::registers_tampered);

  py::class_<PyBridge>(m, "Bridge")
      .def(py::init<const std::filesystem::path&, const std::filesystem::path&>(), py::arg("client_config"),
           py::arg("server_config"))
      .def("start", &PyBridge::start)
      .def("stop", &PyBridge::stop)
      .def("wait_serving", &PyBridge::wait_serving, py::arg("timeout_s") = 10.0)
      .def("failure", &PyBridge::failure)
      .def("ports", &PyBridge::ports);
}
