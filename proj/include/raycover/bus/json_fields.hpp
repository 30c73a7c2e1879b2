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

// Typed field access over nlohmann::json with errors that name the field
// path. Shared by the wire codec and the config loader.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "json.hpp"
#include "raycover/errors.hpp"

namespace raycover::bus::detail {

inline std::string join_path(const std::string& parent, const char* key) {
    return parent.empty() ? std::string(key) : parent + "." + key;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& parent) {
    if (!obj.is_object()) throw ValidationError("'" + (parent.empty() ? "document" : parent) + "' must be an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError("missing field '" + join_path(parent, key) + "'");
    return *it;
}

inline const nlohmann::json& require_object(const nlohmann::json& obj, const char* key, const std::string& parent) {
    const auto& v = require(obj, key, parent);
    if (!v.is_object()) throw ValidationError("field '" + join_path(parent, key) + "' must be an object");
    return v;
}

inline double get_double(const nlohmann::json& obj, const char* key, const std::string& parent) {
    const auto& v = require(obj, key, parent);
    if (!v.is_number()) throw ValidationError("field '" + join_path(parent, key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError("field '" + join_path(parent, key) + "' must be finite");
    return d;
}

inline double get_double_or(const nlohmann::json& obj, const char* key, const std::string& parent, double fallback) {
    return obj.contains(key) ? get_double(obj, key, parent) : fallback;
}

inline std::int64_t get_int(const nlohmann::json& obj, const char* key, const std::string& parent) {
    const auto& v = require(obj, key, parent);
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw ValidationError("field '" + join_path(parent, key) + "' out of range");
        }
        return static_cast<std::int64_t>(u);
    }
    if (!v.is_number_integer()) throw ValidationError("field '" + join_path(parent, key) + "' must be an integer");
    return v.get<std::int64_t>();
}

inline std::uint64_t get_uint(const nlohmann::json& obj, const char* key, const std::string& parent) {
    const auto& v = require(obj, key, parent);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ValidationError("field '" + join_path(parent, key) + "' must be a non-negative integer");
}

inline std::string get_string(const nlohmann::json& obj, const char* key, const std::string& parent) {
    const auto& v = require(obj, key, parent);
    if (!v.is_string()) throw ValidationError("field '" + join_path(parent, key) + "' must be a string");
    return v.get<std::string>();
}

}  // namespace raycover::bus::detail
