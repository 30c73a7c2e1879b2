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

// Command-line entry points: run a coverage job from a config file, render a
// stored map, or serve jobs from an MQTT broker.
//
// Exit codes: 0 ok, 1 internal, 2 config/usage, 3 scene or map input,
// 4 broker. Every failure prints one `error:<category>: <reason>` line.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <numeric>
#include <pthread.h>
#include <sstream>

#include "CLI11.hpp"
#include "raycover/accel.hpp"
#include "raycover/bus/mqtt_client.hpp"
#include "raycover/bus/sections.hpp"
#include "raycover/config.hpp"
#include "raycover/coverage.hpp"
#include "raycover/errors.hpp"
#include "raycover/scene.hpp"
#include "raycover/service.hpp"

namespace {

using namespace raycover;

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kInput = 3, kBroker = 4 };

int fail(Exit code, std::string_view category, std::string_view reason) {
    std::string line(reason);
    for (char& c : line) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error:" << category << ": " << line << '\n';
    return code;
}

void print_hit_stats(const CoverageMap& map) {
    std::vector<std::uint64_t> hits;
    for (auto h : map.hits) {
        if (h > 0) hits.push_back(h);
    }
    std::cout << "cells: " << map.grid.ni << "x" << map.grid.nj << ", with hits: " << hits.size() << "\n";
    if (hits.empty()) return;
    std::sort(hits.begin(), hits.end());
    const double mean = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0})) /
                        static_cast<double>(hits.size());
    std::cout << "hits per cell: min " << hits.front() << ", median " << hits[hits.size() / 2] << ", mean " << mean
              << ", max " << hits.back() << "\n";
}

int cmd_run(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = load_run_config(config_path);
    } catch (const ValidationError& e) {
        return fail(kConfig, "config", e.what());
    }

    Scene scene;
    try {
        scene = load_scene_files(cfg.scene_path, cfg.materials_path);
    } catch (const ParseError& e) {
        return fail(kInput, "scene", e.what());
    } catch (const std::exception& e) {
        return fail(kInput, "scene", e.what());
    }
    for (const auto& w : scene.diagnostics().warnings) std::cerr << "warning: " << w << "\n";
    if (auto w = placement_warning(scene, cfg.tx)) std::cerr << "warning: " << *w << "\n";

    try {
        const AccelIndex index = build_index(scene);
        const CoverageGrid grid = bus::to_grid(cfg.grid);
        auto map = compute_coverage(scene, index, cfg.tx, grid, cfg.trace, {cfg.workers, nullptr, nullptr});
        save_map(*map, cfg.output.map);
        if (!cfg.output.heatmap.empty()) {
            write_ppm(render_heatmap(*map, cfg.output.palette, cfg.output.db_lo, cfg.output.db_hi), cfg.output.heatmap);
        }
        std::cout << "triangles: " << scene.triangles().size() << ", rays: " << cfg.trace.rays
                  << ", duration: " << map->meta.duration_s << " s\n";
        print_hit_stats(*map);
        std::cout << "map: " << cfg.output.map << "\n";
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
    return kOk;
}

int cmd_render(const std::string& map_path, const std::string& out_path, const std::string& palette,
               const std::string& range) {
    double lo = kDefaultDbLow;
    double hi = kDefaultDbHigh;
    if (!range.empty()) {
        const auto comma = range.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing comma");
            std::size_t used = 0;
            const std::string a = range.substr(0, comma);
            const std::string b = range.substr(comma + 1);
            lo = std::stod(a, &used);
            if (used != a.size()) throw std::invalid_argument("trailing characters");
            hi = std::stod(b, &used);
            if (used != b.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            return fail(kConfig, "range", "expected --range lo,hi, got '" + range + "'");
        }
        if (!(lo < hi)) return fail(kConfig, "range", "range lo must be below hi, got '" + range + "'");
    }
    if (!is_known_palette(palette)) return fail(kConfig, "palette", "unknown palette '" + palette + "'");

    CoverageMap map;
    try {
        map = load_map(map_path);
    } catch (const std::exception& e) {
        return fail(kInput, "map", e.what());
    }
    try {
        write_ppm(render_heatmap(map, palette, lo, hi), out_path);
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
    return kOk;
}

int cmd_serve(const std::string& config_path) {
    ServeConfig cfg;
    try {
        cfg = load_serve_config(config_path);
    } catch (const ValidationError& e) {
        return fail(kConfig, "config", e.what());
    }

    // Signals are taken synchronously below, so every thread started from
    // here on must inherit the blocked mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGINT);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::unique_ptr<bus::BusSession> session;
    try {
        session = bus::connect_mqtt(cfg.broker.endpoint, cfg.broker.client_id, cfg.broker.credentials,
                                    cfg.broker.policy);
    } catch (const CredentialError& e) {
        return fail(kBroker, "broker", e.what());
    } catch (const ConnectionError& e) {
        return fail(kBroker, "broker", e.what());
    }

    std::mutex log_mu;
    ServiceOptions opts;
    opts.workers = cfg.workers;
    opts.audit_log_path = cfg.audit_log;
    opts.log = [&log_mu](const std::string& line) {
        std::lock_guard lk(log_mu);
        std::cerr << line << std::endl;
    };
    CoverageService service(*session, opts);
    try {
        service.start();
    } catch (const std::exception& e) {
        return fail(kBroker, "broker", e.what());
    }
    std::cerr << "serving on " << cfg.broker.endpoint.host << ":" << cfg.broker.endpoint.port << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down on signal " << sig << std::endl;
    service.stop();
    session->flush(std::chrono::seconds(2));
    session->close();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"raycover: ray-traced radio coverage maps"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "Compute a coverage map from a config file");
    run->add_option("--config", run_config, "Config document")->required();

    std::string map_path, out_path, palette = "viridis", range;
    auto* render = app.add_subcommand("render", "Render a stored map as a PPM heatmap");
    render->add_option("--map", map_path, "Map document")->required();
    render->add_option("--out", out_path, "Output image")->required();
    render->add_option("--palette", palette, "viridis or plasma");
    render->add_option("--range", range, "dB range as lo,hi");

    std::string serve_config;
    auto* serve = app.add_subcommand("serve", "Serve coverage jobs from the broker");
    serve->add_option("--config", serve_config, "Config document")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfig, "usage", e.what());
    }

    try {
        if (*run) return cmd_run(run_config);
        if (*render) return cmd_render(map_path, out_path, palette, range);
        if (*serve) return cmd_serve(serve_config);
    } catch (const std::exception& e) {
        return fail(kInternal, "internal", e.what());
    }
    return kInternal;
}
