# Copyright 2026 The sigma-bridge Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import socket
import ssl
import struct
import time

import pytest

import sigma_bridge as sb


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_modbus_golden_bytes():
    assert sb.encode_read_request(1, 1, 0, 2).hex() == "000100000006010300000002"
    r = sb.decode_response(bytes.fromhex("00010000000701030400EB04B0"))
    assert r["kind"] == "registers" and r["registers"] == [235, 1200]
    e = sb.decode_response(bytes.fromhex("000100000003018302"))
    assert e["kind"] == "exception" and e["exception_code"] == 2
    assert sb.decode_response(bytes.fromhex("0001"))["kind"] == "incomplete"


def test_register_scaling():
    assert sb.scale_register(235, "0.1") == 23.5
    assert sb.scale_register(1200, "1", "Int32") == 1200
    assert sb.scale_register(0xFFFF, "1", "Int16", True) == -1
    with pytest.raises(sb.ConversionError):
        sb.scale_register(7, "0.5", "Int16")
    with pytest.raises(sb.ConfigError):
        sb.scale_register(1, "0")


def test_timing_model():
    ms = 1_000_000
    assert sb.forwarding_delay(10 * ms, 1 * ms, 1 * ms)["forwarding_delay_ns"] == 1 * ms
    assert sb.forwarding_delay(10 * ms, 1 * ms, 0)["forwarding_delay_ns"] == 10 * ms
    b = sb.data_age_bounds(100 * ms, 1 * ms)
    assert (b["best_ns"], b["worst_ns"], b["direct_ns"]) == (102 * ms, 202 * ms, 101 * ms)
    with pytest.raises(sb.ConfigError):
        sb.forwarding_delay(10, 10, 0)


def test_summarize():
    s = sb.summarize([1.0, 2.0, 3.0, 4.0])
    assert s["count"] == 4 and s["p50"] == 2.0 and s["p99"] == 4.0
    assert s["stddev"] == pytest.approx(1.2909944487358056)


def snap_call(sock, body):
    raw = json.dumps(body, separators=(",", ":")).encode()
    sock.sendall(struct.pack(">I", len(raw)) + raw)
    head = b""
    while len(head) < 4:
        head += sock.recv(4 - len(head))
    (n,) = struct.unpack(">I", head)
    data = b""
    while len(data) < n:
        data += sock.recv(n - len(data))
    return json.loads(data)


def test_bridge_serves_tampered_modbus_value(tmp_path):
    sim = sb.ModbusSim(23.5, 1200)
    sim.start()
    sim.set_override(0, 850)
    proxy = sb.TamperProxy("127.0.0.1", sim.port, ["0=235"])
    proxy.start()

    sb.generate_self_signed("localhost", str(tmp_path / "server.pem"), str(tmp_path / "server.key"))
    port = free_port()
    client = {"devices": [{"alias": "Cooler", "protocol": "modbus", "endpoint": f"127.0.0.1:{proxy.port}",
                           "pollIntervalMs": 50, "unitId": 1,
                           "registers": [{"address": 0, "scale": "0.1", "type": "Double", "ns": 1, "id": "temp",
                                          "browseName": "Temperature"}]}]}
    server = {"tls": {"cert": "server.pem", "key": "server.key"},
              "servers": [{"alias": "Cooler", "host": "127.0.0.1", "port": port,
                           "auth": {"mode": "userpass", "user": "op", "pass": "pw"}}]}
    (tmp_path / "client.json").write_text(json.dumps(client))
    (tmp_path / "server.json").write_text(json.dumps(server))
    assert sb.validate_configs(str(tmp_path / "client.json"), str(tmp_path / "server.json")) == {
        "devices": 1, "servers": 1}

    bridge = sb.Bridge(str(tmp_path / "client.json"), str(tmp_path / "server.json"))
    bridge.start()
    try:
        assert bridge.wait_serving(10.0), bridge.failure()
        assert bridge.ports() == {"Cooler": port}

        ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_CLIENT)
        ctx.load_verify_locations(str(tmp_path / "server.pem"))
        with socket.create_connection(("127.0.0.1", port)) as raw, ctx.wrap_socket(
                raw, server_hostname="localhost") as tls:
            denied = snap_call(tls, {"op": "read", "rid": 1, "ns": 1, "id": "temp"})
            assert denied["ok"] is False and denied["err"] == "BAD_AUTH"
            assert snap_call(tls, {"op": "hello", "rid": 2, "user": "op", "pass": "pw"})["ok"] is True
            value = None
            deadline = time.time() + 5
            rid = 3
            while time.time() < deadline:
                r = snap_call(tls, {"op": "read", "rid": rid, "ns": 1, "id": "temp"})
                rid += 1
                if r["ok"]:
                    value = r["value"]
                    break
                time.sleep(0.01)
            assert value == 23.5
        assert proxy.registers_tampered > 0
        assert sim.current(0) == 850
    finally:
        bridge.stop()
        proxy.stop()
        sim.stop()

    mirror = sb.mirror_load(str(tmp_path / "config"), "Cooler")
    assert mirror["namespaces"][1] == "urn:sigma:modbus:Cooler"
    assert [n["browse_path"] for n in mirror["nodes"]] == ["Objects/Cooler/Registers/Temperature"]


def test_config_errors_surface_as_python_exceptions(tmp_path):
    (tmp_path / "client.json").write_text('{"devices": [')
    (tmp_path / "server.json").write_text("{}")
    with pytest.raises(sb.ConfigError, match="invalid JSON"):
        sb.validate_configs(str(tmp_path / "client.json"), str(tmp_path / "server.json"))
    assert issubclass(sb.ConfigError, sb.SigmaError)
