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

#include "raycover/config.hpp"

#include "json.hpp"
#include "raycover/bus/json_fields.hpp"
#include "raycover/bus/sections.hpp"
#include "raycover/errors.hpp"
#include "raycover/scene.hpp"

namespace raycover {

namespace {

using nlohmann::json;
using namespace bus::detail;

const std::string kRoot = "config";

json parse_document(std::string_view text) {
    try {
        json j = json::parse(text);
        if (!j.is_object()) throw ValidationError("config: document must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config: malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) return p;
    return (base / path).string();
}

std::string get_string_or(const json& obj, const char* key, const std::string& parent, std::string fallback) {
    return obj.contains(key) ? get_string(obj, key, parent) : fallback;
}

unsigned get_workers(const json& trace, const std::string& path) {
    if (!trace.contains("workers")) return 0;
    const auto w = get_uint(trace, "workers", path);
    if (w > 1024) throw ValidationError("field '" + path + ".workers' out of range");
    return static_cast<unsigned>(w);
}

std::string read_config(const std::string& path) {
    try {
        return read_text_file(path);
    } catch (const std::exception& e) {
        throw ValidationError("config: cannot read '" + path + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json doc = parse_document(json_text);
    RunConfig cfg;

    const std::string scene_path = join_path(kRoot, "scene");
    const auto& scene = require_object(doc, "scene", kRoot);
    cfg.scene_path = resolve(base_dir, get_string(scene, "path", scene_path));
    cfg.materials_path = resolve(base_dir, get_string_or(scene, "materials", scene_path, {}));

    cfg.tx = bus::transmitter_from_json(require_object(doc, "tx", kRoot), join_path(kRoot, "tx"));
    cfg.grid = bus::grid_from_json(require_object(doc, "grid", kRoot), join_path(kRoot, "grid"));
    const auto& trace = require_object(doc, "trace", kRoot);
    cfg.trace = bus::trace_from_json(trace, join_path(kRoot, "trace"));
    cfg.workers = get_workers(trace, join_path(kRoot, "trace"));

    const std::string out_path = join_path(kRoot, "output");
    const auto& out = require_object(doc, "output", kRoot);
    cfg.output.map = resolve(base_dir, get_string(out, "map", out_path));
    cfg.output.heatmap = resolve(base_dir, get_string_or(out, "heatmap", out_path, {}));
    cfg.output.palette = get_string_or(out, "palette", out_path, "viridis");
    if (!is_known_palette(cfg.output.palette)) {
        throw ValidationError("field '" + out_path + ".palette' names an unknown palette '" + cfg.output.palette + "'");
    }
    if (out.contains("db_range")) {
        const auto& r = out.at("db_range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
            throw ValidationError("field '" + out_path + ".db_range' must be [lo, hi]");
        }
        cfg.output.db_lo = r[0].get<double>();
        cfg.output.db_hi = r[1].get<double>();
        if (!(cfg.output.db_lo < cfg.output.db_hi)) {
            throw ValidationError("field '" + out_path + ".db_range' must have lo < hi");
        }
    }

    validate(cfg.tx);
    validate(cfg.trace);
    bus::to_grid(cfg.grid);
    return cfg;
}

ServeConfig parse_serve_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json doc = parse_document(json_text);
    ServeConfig cfg;

    const std::string bpath = join_path(kRoot, "broker");
    const auto& broker = require_object(doc, "broker", kRoot);
    cfg.broker.endpoint.host = get_string(broker, "host", bpath);
    if (broker.contains("port")) {
        const auto port = get_uint(broker, "port", bpath);
        if (port == 0 || port > 65535) throw ValidationError("field '" + bpath + ".port' out of range");
        cfg.broker.endpoint.port = static_cast<std::uint16_t>(port);
    }
    cfg.broker.client_id = get_string_or(broker, "client_id", bpath, cfg.broker.client_id);
    if (broker.contains("username")) {
        cfg.broker.credentials = bus::Credentials{get_string(broker, "username", bpath),
                                                  get_string_or(broker, "password", bpath, {})};
    }
    if (broker.contains("retries")) {
        const auto retries = get_uint(broker, "retries", bpath);
        if (retries > 100) throw ValidationError("field '" + bpath + ".retries' out of range");
        cfg.broker.policy.max_retries = static_cast<int>(retries);
    }

    cfg.audit_log = resolve(base_dir, get_string_or(doc, "audit_log", kRoot, {}));
    if (doc.contains("trace") && doc.at("trace").is_object()) {
        cfg.workers = get_workers(doc.at("trace"), join_path(kRoot, "trace"));
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_config(path), std::filesystem::path(path).parent_path());
}

ServeConfig load_serve_config(const std::string& path) {
    return parse_serve_config(read_config(path), std::filesystem::path(path).parent_path());
}

}  // namespace raycover
