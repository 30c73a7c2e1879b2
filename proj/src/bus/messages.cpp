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

#include "raycover/bus/messages.hpp"

#include <cmath>

#include "json.hpp"
#include "raycover/bus/json_fields.hpp"
#include "raycover/bus/sections.hpp"
#include "raycover/errors.hpp"

namespace raycover::bus {

using nlohmann::json;
using nlohmann::ordered_json;
using namespace detail;

namespace {

// Identifiers end up as topic levels, so they may not contain level
// separators, wildcards, whitespace or control characters.
void validate_token(const std::string& value, const char* field, std::size_t max_len) {
    if (value.empty()) throw ValidationError("field '" + std::string(field) + "' must be non-empty");
    if (value.size() > max_len) {
        throw ValidationError("field '" + std::string(field) + "' longer than " + std::to_string(max_len));
    }
    for (unsigned char c : value) {
        if (c == '/' || c == '+' || c == '#' || c <= 0x20 || c == 0x7F) {
            throw ValidationError("field '" + std::string(field) + "' contains a character not allowed in topics");
        }
    }
}

bool is_hex_digest(const std::string& s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

JobStatus parse_status(const std::string& s) {
    if (s == "done") return JobStatus::done;
    if (s == "failed") return JobStatus::failed;
    if (s == "superseded") return JobStatus::superseded;
    throw ValidationError("field 'status' must be one of done|failed|superseded");
}

SensorKind parse_sensor_kind(const std::string& s) {
    if (s == "temperature") return SensorKind::temperature;
    if (s == "weather") return SensorKind::weather;
    if (s == "custom") return SensorKind::custom;
    throw ValidationError("field 'kind' must be one of temperature|weather|custom");
}

MessageKind detect_kind(const json& j) {
    if (!j.is_object()) throw KindError("message is not a JSON object");
    if (j.contains("sensor_id")) return MessageKind::sensor_reading;
    if (j.contains("actuator_id")) return MessageKind::actuator_command;
    if (j.contains("job_id")) {
        if (j.contains("status")) return MessageKind::coverage_result;
        if (j.contains("tx") || j.contains("grid") || j.contains("trace") || j.contains("scene")) {
            return MessageKind::coverage_request;
        }
    }
    throw KindError("document matches no known message kind");
}

ordered_json encode(const CoverageRequest& m) {
    ordered_json j;
    j["job_id"] = m.job_id;
    j["tx"] = to_json(m.tx);
    j["grid"] = to_json(m.grid);
    j["trace"] = to_json(m.trace);
    ordered_json scene = ordered_json::object();
    if (m.inline_scene) scene["inline_b64"] = base64_encode(*m.inline_scene);
    if (m.scene_ref) scene["ref"] = {{"uri", m.scene_ref->uri}, {"sha256", m.scene_ref->sha256}};
    j["scene"] = scene;
    return j;
}

ordered_json encode(const CoverageResult& m) {
    ordered_json j;
    j["job_id"] = m.job_id;
    j["status"] = to_string(m.status);
    j["duration_s"] = m.duration_s;
    if (m.map_document) j["map_b64"] = base64_encode(*m.map_document);
    if (m.error) j["error"] = *m.error;
    return j;
}

ordered_json encode(const SensorReading& m) {
    ordered_json j;
    j["sensor_id"] = m.sensor_id;
    j["kind"] = to_string(m.kind);
    if (const auto* d = std::get_if<double>(&m.value)) {
        j["value"] = *d;
    } else {
        j["value"] = std::get<std::string>(m.value);
    }
    j["unit"] = m.unit;
    j["ts_ms"] = m.ts_ms;
    return j;
}

ordered_json encode(const ActuatorCommand& m) {
    ordered_json j;
    j["actuator_id"] = m.actuator_id;
    j["command"] = m.command;
    ordered_json args = ordered_json::object();
    for (const auto& [k, v] : m.args) args[k] = v;
    j["args"] = args;
    j["ts_ms"] = m.ts_ms;
    return j;
}

CoverageRequest decode_request(const json& j) {
    CoverageRequest m;
    m.job_id = get_string(j, "job_id", "");
    m.tx = transmitter_from_json(require_object(j, "tx", ""), "tx");
    m.grid = grid_from_json(require_object(j, "grid", ""), "grid");
    m.trace = trace_from_json(require_object(j, "trace", ""), "trace");
    const auto& scene = require_object(j, "scene", "");
    if (scene.contains("inline_b64")) m.inline_scene = base64_decode(get_string(scene, "inline_b64", "scene"));
    if (scene.contains("ref")) {
        const auto& ref = require_object(scene, "ref", "scene");
        m.scene_ref = SceneRef{get_string(ref, "uri", "scene.ref"), get_string(ref, "sha256", "scene.ref")};
    }
    return m;
}

CoverageResult decode_result(const json& j) {
    CoverageResult m;
    m.job_id = get_string(j, "job_id", "");
    m.status = parse_status(get_string(j, "status", ""));
    m.duration_s = get_double(j, "duration_s", "");
    if (j.contains("map_b64")) m.map_document = base64_decode(get_string(j, "map_b64", ""));
    if (j.contains("error")) m.error = get_string(j, "error", "");
    return m;
}

SensorReading decode_reading(const json& j) {
    SensorReading m;
    m.sensor_id = get_string(j, "sensor_id", "");
    m.kind = parse_sensor_kind(get_string(j, "kind", ""));
    const auto& value = require(j, "value", "");
    if (value.is_number()) {
        m.value = get_double(j, "value", "");
    } else if (value.is_string()) {
        m.value = value.get<std::string>();
    } else {
        throw ValidationError("field 'value' must be a number or a string");
    }
    m.unit = get_string(j, "unit", "");
    m.ts_ms = get_int(j, "ts_ms", "");
    return m;
}

ActuatorCommand decode_command(const json& j) {
    ActuatorCommand m;
    m.actuator_id = get_string(j, "actuator_id", "");
    m.command = get_string(j, "command", "");
    const auto& args = require_object(j, "args", "");
    for (const auto& [k, v] : args.items()) {
        if (!v.is_string()) throw ValidationError("field 'args." + k + "' must be a string");
        m.args.emplace(k, v.get<std::string>());
    }
    m.ts_ms = get_int(j, "ts_ms", "");
    return m;
}

}  // namespace

// ---- sections -------------------------------------------------------------

ordered_json to_json(const Transmitter& tx) {
    ordered_json j;
    j["x"] = tx.position.x;
    j["y"] = tx.position.y;
    j["z"] = tx.position.z;
    j["frequency_hz"] = tx.frequency_hz;
    j["antenna"] = {{"kind", tx.antenna.kind == AntennaKind::isotropic ? "isotropic" : "directional"},
                    {"exponent", tx.antenna.exponent}};
    j["boresight"] = {{"x", tx.boresight.x}, {"y", tx.boresight.y}, {"z", tx.boresight.z}};
    return j;
}

ordered_json to_json(const GridParams& g) {
    ordered_json j;
    j["x0"] = g.x0;
    j["y0"] = g.y0;
    j["x1"] = g.x1;
    j["y1"] = g.y1;
    j["cell_size"] = g.cell_size;
    j["height"] = g.height;
    return j;
}

ordered_json to_json(const TraceConfig& t) {
    ordered_json j;
    j["rays"] = t.rays;
    j["max_depth"] = t.max_depth;
    j["min_amplitude"] = t.min_amplitude;
    j["seed"] = t.seed;
    return j;
}

Transmitter transmitter_from_json(const json& j, const std::string& path) {
    Transmitter tx;
    tx.position = {get_double(j, "x", path), get_double(j, "y", path), get_double(j, "z", path)};
    tx.frequency_hz = get_double(j, "frequency_hz", path);
    if (j.contains("antenna")) {
        const std::string apath = join_path(path, "antenna");
        const auto& a = require_object(j, "antenna", path);
        const std::string kind = get_string(a, "kind", apath);
        if (kind == "isotropic") {
            tx.antenna.kind = AntennaKind::isotropic;
        } else if (kind == "directional") {
            tx.antenna.kind = AntennaKind::directional;
        } else {
            throw ValidationError("field '" + apath + ".kind' must be isotropic|directional");
        }
        tx.antenna.exponent = get_double_or(a, "exponent", apath, 0.0);
    }
    if (j.contains("boresight")) {
        const std::string bpath = join_path(path, "boresight");
        const auto& b = require_object(j, "boresight", path);
        tx.boresight = {get_double(b, "x", bpath), get_double(b, "y", bpath), get_double(b, "z", bpath)};
    }
    validate(tx);
    return tx;
}

GridParams grid_from_json(const json& j, const std::string& path) {
    GridParams g;
    g.x0 = get_double(j, "x0", path);
    g.y0 = get_double(j, "y0", path);
    g.x1 = get_double(j, "x1", path);
    g.y1 = get_double(j, "y1", path);
    g.cell_size = get_double(j, "cell_size", path);
    g.height = get_double_or(j, "height", path, kDefaultGridHeight);
    to_grid(g);
    return g;
}

TraceConfig trace_from_json(const json& j, const std::string& path) {
    TraceConfig t;
    t.rays = get_uint(j, "rays", path);
    const auto depth = get_int(j, "max_depth", path);
    if (depth < 0 || depth > 1000) throw ValidationError("field '" + join_path(path, "max_depth") + "' out of range");
    t.max_depth = static_cast<int>(depth);
    t.min_amplitude = get_double_or(j, "min_amplitude", path, 0.0);
    t.seed = get_uint(j, "seed", path);
    validate(t);
    return t;
}

CoverageGrid to_grid(const GridParams& g) { return make_grid(g.x0, g.y0, g.x1, g.y1, g.cell_size, g.height); }

// ---- messages -------------------------------------------------------------

std::string_view to_string(MessageKind kind) {
    switch (kind) {
        case MessageKind::coverage_request: return "CoverageRequest";
        case MessageKind::coverage_result: return "CoverageResult";
        case MessageKind::sensor_reading: return "SensorReading";
        case MessageKind::actuator_command: return "ActuatorCommand";
    }
    return "unknown";
}

std::string_view to_string(JobStatus status) {
    switch (status) {
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
        case JobStatus::superseded: return "superseded";
    }
    return "unknown";
}

std::string_view to_string(SensorKind kind) {
    switch (kind) {
        case SensorKind::temperature: return "temperature";
        case SensorKind::weather: return "weather";
        case SensorKind::custom: return "custom";
    }
    return "unknown";
}

MessageKind kind_of(const Message& msg) { return static_cast<MessageKind>(msg.index()); }

void validate(const CoverageRequest& m) {
    validate_token(m.job_id, "job_id", kMaxJobIdLength);
    validate(m.tx);
    to_grid(m.grid);
    validate(m.trace);
    if (m.inline_scene.has_value() == m.scene_ref.has_value()) {
        throw ValidationError("field 'scene' must carry exactly one of inline_b64 or ref");
    }
    if (m.inline_scene && m.inline_scene->size() > kMaxInlineSceneBytes) {
        throw ValidationError("inline scene exceeds 8 MiB; send a ref with sha256 instead");
    }
    if (m.scene_ref) {
        if (m.scene_ref->uri.empty()) throw ValidationError("field 'scene.ref.uri' must be non-empty");
        if (!is_hex_digest(m.scene_ref->sha256)) {
            throw ValidationError("field 'scene.ref.sha256' must be 64 lowercase hex digits");
        }
    }
}

void validate(const CoverageResult& m) {
    validate_token(m.job_id, "job_id", kMaxJobIdLength);
    if (!(m.duration_s >= 0.0) || !std::isfinite(m.duration_s)) {
        throw ValidationError("field 'duration_s' must be >= 0");
    }
    const bool want_map = m.status == JobStatus::done;
    const bool want_error = m.status == JobStatus::failed;
    if (m.map_document.has_value() != want_map) {
        throw ValidationError("field 'map_b64' must be present iff status is done");
    }
    if (m.error.has_value() != want_error) {
        throw ValidationError("field 'error' must be present iff status is failed");
    }
}

void validate(const SensorReading& m) {
    validate_token(m.sensor_id, "sensor_id", 256);
    if (m.ts_ms <= 0) throw ValidationError("field 'ts_ms' must be > 0");
    if (const auto* d = std::get_if<double>(&m.value); d && !std::isfinite(*d)) {
        throw ValidationError("field 'value' must be finite");
    }
}

void validate(const ActuatorCommand& m) {
    validate_token(m.actuator_id, "actuator_id", 256);
    if (m.command.empty()) throw ValidationError("field 'command' must be non-empty");
    if (m.ts_ms < 0) throw ValidationError("field 'ts_ms' must be >= 0");
}

std::string encode_message(const Message& msg) {
    return std::visit(
        [](const auto& m) {
            validate(m);
            return encode(m).dump();
        },
        msg);
}

Message decode_message(std::string_view bytes, MessageKind expected) {
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed message: ") + e.what(), e.byte);
    }
    const MessageKind found = detect_kind(j);
    if (found != expected) {
        throw KindError("expected " + std::string(to_string(expected)) + " but got " + std::string(to_string(found)));
    }
    Message out;
    switch (found) {
        case MessageKind::coverage_request: out = decode_request(j); break;
        case MessageKind::coverage_result: out = decode_result(j); break;
        case MessageKind::sensor_reading: out = decode_reading(j); break;
        case MessageKind::actuator_command: out = decode_command(j); break;
    }
    std::visit([](const auto& m) { validate(m); }, out);
    return out;
}

template <>
CoverageRequest decode_as<CoverageRequest>(std::string_view b) {
    return std::get<CoverageRequest>(decode_message(b, MessageKind::coverage_request));
}
template <>
CoverageResult decode_as<CoverageResult>(std::string_view b) {
    return std::get<CoverageResult>(decode_message(b, MessageKind::coverage_result));
}
template <>
SensorReading decode_as<SensorReading>(std::string_view b) {
    return std::get<SensorReading>(decode_message(b, MessageKind::sensor_reading));
}
template <>
ActuatorCommand decode_as<ActuatorCommand>(std::string_view b) {
    return std::get<ActuatorCommand>(decode_message(b, MessageKind::actuator_command));
}

std::optional<std::string> peek_job_id(std::string_view bytes) {
    const json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (!j.is_object()) return std::nullopt;
    const auto it = j.find("job_id");
    if (it == j.end() || !it->is_string()) return std::nullopt;
    std::string id = it->get<std::string>();
    try {
        validate_token(id, "job_id", kMaxJobIdLength);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
    return id;
}

std::string result_topic(std::string_view job_id) { return "dt/coverage/result/" + std::string(job_id); }
std::string sensor_topic(std::string_view sensor_id) { return "dt/sensors/" + std::string(sensor_id); }
std::string actuator_topic(std::string_view actuator_id) { return "dt/actuators/" + std::string(actuator_id); }

}  // namespace raycover::bus
