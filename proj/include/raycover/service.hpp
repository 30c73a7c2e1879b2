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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "raycover/bus/messages.hpp"
#include "raycover/bus/session.hpp"
#include "raycover/coverage.hpp"

namespace raycover {

enum class JobState { queued, running, done, failed, superseded };

std::string_view to_string(JobState state);

struct JobRecord {
    std::string job_id;
    JobState state = JobState::queued;
    std::chrono::system_clock::time_point submitted;
    std::optional<std::chrono::system_clock::time_point> started;
    std::optional<std::chrono::system_clock::time_point> finished;
};

// Point-in-time copy of the twin's retained state.
struct TwinState {
    std::map<std::string, bus::SensorReading> sensors;
    std::shared_ptr<const CoverageMap> last_map;
    std::optional<std::string> last_map_job;
    std::optional<Transmitter> active_tx;
};

struct ServiceStats {
    std::uint64_t submitted = 0;
    std::uint64_t done = 0;
    std::uint64_t failed = 0;
    std::uint64_t superseded = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t stale_readings = 0;
    std::uint64_t rejected_messages = 0;
    std::size_t max_running = 0;
    std::size_t max_queued = 0;
};

struct ServiceOptions {
    unsigned workers = 0;                        // tracer threads; 0: all cores
    std::string audit_log_path;                  // empty: in-memory only
    std::function<void(const std::string&)> log; // one line per job transition
    const simd::KernelTable* kernels = nullptr;
};

// Consumes coverage requests and sensor readings from the bus. One job runs
// at a time and at most one waits; a newer request supersedes the waiting
// job and cancels the running one at its next batch boundary. Every
// accepted job_id gets exactly one result; redelivered requests are ignored.
class CoverageService {
public:
    CoverageService(bus::BusSession& session, ServiceOptions options = {});
    ~CoverageService();

    CoverageService(const CoverageService&) = delete;
    CoverageService& operator=(const CoverageService&) = delete;

    // Subscribes to the request and sensor topics and starts the runner.
    void start();

    // Supersedes the queued and running jobs, publishes their results and
    // joins the runner. Idempotent.
    void stop();

    // Entry points behind the bus handlers, callable directly.
    void submit_request(bus::CoverageRequest request);
    void ingest_sensor(const bus::SensorReading& reading);

    TwinState query_state() const;

    // Publishes on dt/actuators/<id>, then appends to the audit log. A
    // SessionError propagates and leaves the log untouched.
    void send_actuator(const bus::ActuatorCommand& command);
    std::vector<bus::ActuatorCommand> audit_log() const;

    ServiceStats stats() const;
    std::optional<JobRecord> job(const std::string& job_id) const;

    // True once no job is queued or running.
    bool wait_idle(std::chrono::milliseconds timeout) const;

private:
    struct Pending {
        bus::CoverageRequest request;
        std::string scene_document;
    };

    void on_request(const std::string& payload);
    void on_sensor(const std::string& payload);
    void runner();
    bus::CoverageResult run_job(const Pending& job);
    void publish_result(const bus::CoverageResult& result);
    void transition(const std::string& job_id, JobState state);
    void log(const std::string& line) const;

    bus::BusSession& session_;
    ServiceOptions options_;

    mutable std::mutex jobs_mu_;
    mutable std::condition_variable jobs_cv_;
    std::optional<Pending> queued_;
    std::optional<std::string> running_;
    std::set<std::string> seen_;
    std::map<std::string, JobRecord> records_;
    ServiceStats stats_;
    bool stopping_ = false;
    bool started_ = false;
    std::atomic<bool> cancel_{false};
    std::atomic<std::uint64_t> stale_{0};
    std::atomic<std::uint64_t> rejected_{0};
    std::thread runner_;

    mutable std::shared_mutex state_mu_;
    TwinState state_;

    mutable std::mutex audit_mu_;
    std::vector<bus::ActuatorCommand> audit_;
};

}  // namespace raycover
