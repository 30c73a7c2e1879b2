// SPDX-License-Identifier: Apache-2.0
//
// raycover: ray-traced radio coverage maps for a digital-twin testbed
// Copyright (C) 2026 The raycover Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// One JSON config document drives both `run` and `serve`. Sections:
//   scene{path, materials?}  tx{...}  grid{...}  trace{..., workers?}
//   output{map, heatmap?, palette?, db_range?}
//   broker{host, port?, client_id?, username?, password?, retries?}
//   audit_log?
// tx, grid and trace share the wire schema. Each command reads only the
// sections it needs. Relative paths resolve against the config's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "raycover/bus/messages.hpp"
#include "raycover/bus/session.hpp"
#include "raycover/coverage.hpp"

namespace raycover {

struct OutputSection {
    std::string map;
    std::string heatmap;  // empty: no image
    std::string palette = "viridis";
    double db_lo = kDefaultDbLow;
    double db_hi = kDefaultDbHigh;
};

struct RunConfig {
    std::string scene_path;
    std::string materials_path;  // empty: embedded materials only
    Transmitter tx;
    bus::GridParams grid;
    TraceConfig trace;
    unsigned workers = 0;
    OutputSection output;
};

struct BrokerSection {
    bus::Endpoint endpoint;
    std::string client_id = "raycover-service";
    std::optional<bus::Credentials> credentials;
    bus::ConnectPolicy policy;
};

struct ServeConfig {
    BrokerSection broker;
    std::string audit_log;
    unsigned workers = 0;
};

// Throw ValidationError naming the offending field ("config.tx.frequency_hz").
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ServeConfig parse_serve_config(std::string_view json_text, const std::filesystem::path& base_dir = {});

// Read the file first; an unreadable file is a ValidationError too.
RunConfig load_run_config(const std::string& path);
ServeConfig load_serve_config(const std::string& path);

}  // namespace raycover
