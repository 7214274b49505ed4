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

"""Python access to the sigma-bridge core: Modbus codec, timing model,
simulators, the tamper proxy and the bridge itself."""

from ._core import (
    Bridge,
    ConfigError,
    ConversionError,
    IoError,
    LegacySim,
    ModbusSim,
    ProtocolError,
    SigmaError,
    StartupError,
    StructuralError,
    TamperProxy,
    data_age_bounds,
    decode_response,
    encode_read_request,
    forwarding_delay,
    generate_self_signed,
    mirror_load,
    scale_register,
    summarize,
    validate_configs,
)

__all__ = [
    "Bridge",
    "ConfigError",
    "ConversionError",
    "IoError",
    "LegacySim",
    "ModbusSim",
    "ProtocolError",
    "SigmaError",
    "StartupError",
    "StructuralError",
    "TamperProxy",
    "data_age_bounds",
    "decode_response",
    "encode_read_request",
    "forwarding_delay",
    "generate_self_signed",
    "mirror_load",
    "scale_register",
    "summarize",
    "validate_configs",
]
