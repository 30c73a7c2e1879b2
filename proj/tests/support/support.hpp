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

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "raycover/bus/messages.hpp"
#include "raycover/bus/session.hpp"
#include "raycover/coverage.hpp"
#include "raycover/scene.hpp"

namespace testsupport {

// Friis free-space path gain in dB: 20 log10(lambda / (4 pi d)).
double friis_db(double distance, double frequency_hz);

// Axis-aligned box as 12 triangles (or 10 without the floor).
void add_box(std::string& obj, std::size_t& vertex_count, raycover::Vec3 lo, raycover::Vec3 hi,
             const std::string& material, bool with_floor = true);

// Rectangle in a vertical plane x = const spanning y0..y1, z0..z1.
void add_wall_x(std::string& obj, std::size_t& vertex_count, double x, double y0, double y1, double z0, double z1,
                const std::string& material);

// Desk-scale site: a subdivided ground plane plus randomly placed box
// buildings, about `triangles` faces in total, inside [-extent, extent]^2.
// Buildings keep clear of a disc of radius 6 m around the origin.
std::string desk_scene_document(std::size_t triangles = 10'000, double extent = 128.0, std::uint64_t seed = 7);

raycover::bus::CoverageRequest make_request(const std::string& job_id, const std::string& scene_document,
                                            std::uint64_t rays, raycover::bus::GridParams grid);

// Valid message of the given kind with randomized content, for codec properties.
raycover::bus::Message random_message(std::mt19937_64& rng, raycover::bus::MessageKind kind);

class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    void write(const std::string& name, const std::string& content) const;

private:
    std::filesystem::path path_;
};

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv[0] with the arguments, waits, captures stdout/stderr.
ProcessResult run_process(const std::vector<std::string>& argv);

class Child {
public:
    explicit Child(const std::vector<std::string>& argv);
    ~Child();
    void signal(int sig);
    // Exit code, or nullopt when the child outlives the timeout.
    std::optional<int> wait(std::chrono::milliseconds timeout);
    std::string err() const;

private:
    pid_t pid_ = -1;
    std::string err_path_;
    std::optional<int> status_;
};

// Minimal MQTT 3.1.1 broker over TCP for tests: QoS 0/1 routing, optional
// credentials, and a hook to drop every live connection.
class TestBroker {
public:
    explicit TestBroker(std::optional<raycover::bus::Credentials> required = std::nullopt);
    ~TestBroker();

    std::uint16_t port() const { return port_; }
    void drop_connections();
    std::size_t connections_accepted() const { return accepted_; }
    std::size_t connect_attempts() const { return attempts_; }

private:
    struct Client;
    void accept_loop();
    void serve(std::shared_ptr<Client> client);
    void route(const std::string& topic, const std::string& payload);

    std::optional<raycover::bus::Credentials> required_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> accepted_{0};
    std::atomic<std::size_t> attempts_{0};
    std::mutex mu_;
    std::vector<std::shared_ptr<Client>> clients_;
    std::vector<std::thread> threads_;
    std::thread acceptor_;
};

// Unused port on 127.0.0.1 with nothing listening.
std::uint16_t closed_port();

}  // namespace testsupport
