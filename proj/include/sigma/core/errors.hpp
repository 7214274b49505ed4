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

#include <stdexcept>
#include <string>

namespace sigma {

/// Base of every error raised by the bridge libraries.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad alias, duplicate binding, schema violation).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Address-space inconsistencies: orphans, duplicate keys, path ambiguity.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A raw value could not be represented in the requested kind.
class ConversionError : public Error {
 public:
  using Error::Error;
};

/// Peer violated a wire format (SNAP or Modbus/TCP).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Socket/TLS level failure; the connection is unusable afterwards.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Failure while bringing up servers or workers.
class StartupError : public Error {
 public:
  using Error::Error;
};

}  // namespace sigma
