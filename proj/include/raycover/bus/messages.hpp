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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "raycover/propagation.hpp"

namespace raycover::bus {

inline constexpr std::size_t kMaxJobIdLength = 128;
inline constexpr std::size_t kMaxInlineSceneBytes = 8u << 20;  // 8 MiB, decoded

// Wire form of the measurement grid: an extent plus a cell size.
struct GridParams {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double cell_size = 1.0;
    double height = 1.5;

    friend bool operator==(const GridParams&, const GridParams&) = default;
};

struct SceneRef {
    std::string uri;
    std::string sha256;  // lowercase hex

    friend bool operator==(const SceneRef&, const SceneRef&) = default;
};

struct CoverageRequest {
    std::string job_id;
    Transmitter tx;
    GridParams grid;
    TraceConfig trace;
    // Exactly one of the two must be set.
    std::optional<std::string> inline_scene;  // raw scene document
    std::optional<SceneRef> scene_ref;

    friend bool operator==(const CoverageRequest&, const CoverageRequest&) = default;
};

enum class JobStatus { done, failed, superseded };

struct CoverageResult {
    std::string job_id;
    JobStatus status = JobStatus::done;
    double duration_s = 0.0;
    std::optional<std::string> map_document;  // iff done
    std::optional<std::string> error;         // iff failed

    friend bool operator==(const CoverageResult&, const CoverageResult&) = default;
};

enum class SensorKind { temperature, weather, custom };

struct SensorReading {
    std::string sensor_id;
    SensorKind kind = SensorKind::custom;
    std::variant<double, std::string> value;
    std::string unit;
    std::int64_t ts_ms = 0;

    friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

struct ActuatorCommand {
    std::string actuator_id;
    std::string command;
    std::map<std::string, std::string> args;
    std::int64_t ts_ms = 0;

    friend bool operator==(const ActuatorCommand&, const ActuatorCommand&) = default;
};

using Message = std::variant<CoverageRequest, CoverageResult, SensorReading, ActuatorCommand>;

enum class MessageKind { coverage_request, coverage_result, sensor_reading, actuator_command };

std::string_view to_string(MessageKind kind);
std::string_view to_string(JobStatus status);
std::string_view to_string(SensorKind kind);
MessageKind kind_of(const Message& msg);

// Each throws ValidationError naming the offending field.
void validate(const CoverageRequest& msg);
void validate(const CoverageResult& msg);
void validate(const SensorReading& msg);
void validate(const ActuatorCommand& msg);

// Canonical UTF-8 JSON with fields in schema order.
std::string encode_message(const Message& msg);

// Throws ParseError (byte position) on malformed JSON, KindError when the
// document is another message kind, ValidationError when an invariant fails.
Message decode_message(std::string_view bytes, MessageKind expected);

template <typename T>
T decode_as(std::string_view bytes);

// Best-effort job_id extraction from a request that failed to decode, so a
// failed result can still be addressed.
std::optional<std::string> peek_job_id(std::string_view bytes);

// Topic names used by the twin.
inline constexpr std::string_view kRequestTopic = "dt/coverage/request";
std::string result_topic(std::string_view job_id);
std::string sensor_topic(std::string_view sensor_id);
std::string actuator_topic(std::string_view actuator_id);

// sha256 of `data` as lowercase hex.
std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);  // throws ValidationError

}  // namespace raycover::bus
