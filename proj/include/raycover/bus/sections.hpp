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

// JSON sections shared by wire messages and config documents:
// tx{...}, grid{...}, trace{...}.

#include <string>

#include "json.hpp"
#include "raycover/bus/messages.hpp"
#include "raycover/coverage.hpp"

namespace raycover::bus {

nlohmann::ordered_json to_json(const Transmitter& tx);
nlohmann::ordered_json to_json(const GridParams& grid);
nlohmann::ordered_json to_json(const TraceConfig& trace);

// `path` prefixes field names in error messages ("tx", "config.tx", ...).
Transmitter transmitter_from_json(const nlohmann::json& j, const std::string& path);
GridParams grid_from_json(const nlohmann::json& j, const std::string& path);
TraceConfig trace_from_json(const nlohmann::json& j, const std::string& path);

// make_grid over the wire parameters; throws ValidationError.
CoverageGrid to_grid(const GridParams& grid);

}  // namespace raycover::bus
