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

/**
 * @file config.hpp
 * @brief client_configuration.json / server_configuration.json.
 *
 * Client file:
 *   {"devices":[
 *     {"alias":"PLC21","protocol":"snap","endpoint":"127.0.0.1:14840",
 *      "pollIntervalMs":100,"nodes":[{"ns":2,"id":1001}]},          // or "nodes":"all"
 *     {"alias":"Cooler","protocol":"modbus","endpoint":"127.0.0.1:1502","unitId":1,
 *      "registers":[{"address":0,"scale":"0.1","type":"Double","ns":1,"id":"temp",
 *                    "browseName":"Temperature","signed":false}]}]}
 *
 * Server file:
 *   {"mode":"PubSub",                      // optional, overrides every server
 *    "mirrorRoot":"config",
 *    "instrumentation":false,
 *    "tls":{"cert":"server.pem","key":"server.key"},
 *    "servers":[
 *      {"alias":"PLC21","port":4841,"host":"0.0.0.0","mode":"ClientServer",
 *       "publishIntervalMs":1000,"startupTimeoutMs":60000,
 *       "tls":{"cert":"...","key":"..."},
 *       "auth":{"mode":"userpass","user":"operator","pass":"secret"}}]}   // or {"mode":"cert","trustDir":"trusted"}
 *
 * Relative paths are resolved against the directory of the file naming them.
 */

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigma/insec/insec_client.hpp"
#include "sigma/sec/sec_server.hpp"

namespace sigma::app {

inline constexpr const char* kClientConfigName = "client_configuration.json";
inline constexpr const char* kServerConfigName = "server_configuration.json";
inline constexpr std::int64_t kDefaultPollIntervalMs = 100;

struct ClientConfiguration {
  std::vector<insec::InsecEndpointConfig> devices;
};

struct ServerConfiguration {
  std::vector<sec::SecServerConfig> servers;
  std::optional<sec::Mode> global_mode;
  std::filesystem::path mirror_root;
  bool instrumentation = false;
};

struct Configs {
  ClientConfiguration client;
  ServerConfiguration server;
};

/// Throws ConfigError "<file>: <json path>: <reason>".
ClientConfiguration parse_client_config(const nlohmann::json& j, const std::string& file_label,
                                        const std::filesystem::path& base_dir);
ServerConfiguration parse_server_config(const nlohmann::json& j, const std::string& file_label,
                                        const std::filesystem::path& base_dir);

/// Alias coverage and port uniqueness; throws ConfigError.
void cross_validate(const Configs& configs);

/// Reads, parses and cross-validates both files.
Configs load_configs(const std::filesystem::path& client_path, const std::filesystem::path& server_path);

nlohmann::json to_json(const ClientConfiguration& c);
nlohmann::json to_json(const ServerConfiguration& c);

}  // namespace sigma::app
