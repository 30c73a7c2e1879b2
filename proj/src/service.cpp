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

#include "raycover/service.hpp"

#include <fstream>

#include "raycover/accel.hpp"
#include "raycover/bus/sections.hpp"
#include "raycover/errors.hpp"
#include "raycover/scene.hpp"

namespace raycover {

namespace {

std::string_view strip_file_scheme(std::string_view uri) {
    constexpr std::string_view scheme = "file://";
    if (uri.starts_with(scheme)) uri.remove_prefix(scheme.size());
    return uri;
}

// Reads and hash-checks a referenced scene. Throws ValidationError with the
// reason text that goes into the failed result.
std::string resolve_scene_ref(const bus::SceneRef& ref) {
    const std::string path(strip_file_scheme(ref.uri));
    std::string bytes;
    try {
        bytes = read_text_file(path);
    } catch (const std::exception& e) {
        throw ValidationError("scene reference unreadable: " + std::string(e.what()));
    }
    if (bytes.size() > bus::kMaxInlineSceneBytes) {
        throw ValidationError("scene reference exceeds " + std::to_string(bus::kMaxInlineSceneBytes) + " bytes");
    }
    const std::string actual = bus::sha256_hex(bytes);
    if (actual != ref.sha256) {
        throw ValidationError("scene sha256 mismatch: expected " + ref.sha256 + ", got " + actual);
    }
    return bytes;
}

}  // namespace

std::string_view to_string(JobState state) {
    switch (state) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
        case JobState::superseded: return "superseded";
    }
    return "?";
}

CoverageService::CoverageService(bus::BusSession& session, ServiceOptions options)
    : session_(session), options_(std::move(options)) {}

CoverageService::~CoverageService() { stop(); }

void CoverageService::start() {
    {
        std::lock_guard lk(jobs_mu_);
        if (started_) return;
        started_ = true;
        stopping_ = false;
    }
    runner_ = std::thread([this] { runner(); });
    session_.subscribe(bus::kRequestTopic, [this](const std::string&, const std::string& payload) { on_request(payload); });
    session_.subscribe("dt/sensors/#", [this](const std::string&, const std::string& payload) { on_sensor(payload); });
}

void CoverageService::stop() {
    std::optional<Pending> dropped;
    {
        std::lock_guard lk(jobs_mu_);
        if (stopping_) return;
        stopping_ = true;
        if (queued_) {
            dropped = std::move(queued_);
            queued_.reset();
        }
        if (running_) cancel_ = true;
    }
    jobs_cv_.notify_all();
    if (dropped) {
        transition(dropped->request.job_id, JobState::superseded);
        publish_result({dropped->request.job_id, bus::JobStatus::superseded, 0.0, std::nullopt, std::nullopt});
    }
    if (runner_.joinable()) runner_.join();
}

void CoverageService::on_request(const std::string& payload) {
    bus::CoverageRequest request;
    try {
        request = bus::decode_as<bus::CoverageRequest>(payload);
    } catch (const std::exception& e) {
        ++rejected_;
        const auto job_id = bus::peek_job_id(payload);
        log(std::string("rejected request: ") + e.what());
        if (!job_id) return;
        {
            std::lock_guard lk(jobs_mu_);
            if (!seen_.insert(*job_id).second) {
                ++stats_.duplicates;
                return;
            }
            ++stats_.submitted;
        }
        transition(*job_id, JobState::failed);
        publish_result({*job_id, bus::JobStatus::failed, 0.0, std::nullopt, std::string(e.what())});
        return;
    }
    submit_request(std::move(request));
}

void CoverageService::on_sensor(const std::string& payload) {
    try {
        ingest_sensor(bus::decode_as<bus::SensorReading>(payload));
    } catch (const std::exception& e) {
        ++rejected_;
        log(std::string("rejected sensor reading: ") + e.what());
    }
}

void CoverageService::submit_request(bus::CoverageRequest request) {
    const std::string job_id = request.job_id;
    {
        std::lock_guard lk(jobs_mu_);
        if (!seen_.insert(job_id).second) {
            ++stats_.duplicates;
            return;
        }
        ++stats_.submitted;
    }

    Pending pending;
    std::optional<std::string> error;
    try {
        bus::validate(request);
        if (request.inline_scene) {
            pending.scene_document = *request.inline_scene;
        } else {
            pending.scene_document = resolve_scene_ref(*request.scene_ref);
        }
    } catch (const std::exception& e) {
        error = e.what();
    }
    if (error) {
        transition(job_id, JobState::failed);
        publish_result({job_id, bus::JobStatus::failed, 0.0, std::nullopt, error});
        return;
    }
    {
        std::unique_lock sl(state_mu_);
        state_.active_tx = request.tx;
    }
    pending.request = std::move(request);

    std::optional<Pending> displaced;
    bool rejected = false;
    {
        std::lock_guard lk(jobs_mu_);
        if (stopping_) {
            rejected = true;
        } else {
            records_[job_id] = {job_id, JobState::queued, std::chrono::system_clock::now(), {}, {}};
            if (queued_) displaced = std::move(queued_);
            queued_ = std::move(pending);
            if (running_) cancel_ = true;
            stats_.max_queued = std::max<std::size_t>(stats_.max_queued, 1);
        }
    }
    jobs_cv_.notify_all();
    if (!rejected) log("job " + job_id + " queued");
    if (displaced) {
        transition(displaced->request.job_id, JobState::superseded);
        publish_result({displaced->request.job_id, bus::JobStatus::superseded, 0.0, std::nullopt, std::nullopt});
    }
    if (rejected) {
        transition(job_id, JobState::superseded);
        publish_result({job_id, bus::JobStatus::superseded, 0.0, std::nullopt, std::nullopt});
    }
}

void CoverageService::runner() {
    for (;;) {
        Pending job;
        {
            std::unique_lock lk(jobs_mu_);
            jobs_cv_.wait(lk, [&] { return stopping_ || queued_.has_value(); });
            if (!queued_) return;  // stopping with nothing left
            job = std::move(*queued_);
            queued_.reset();
            running_ = job.request.job_id;
            cancel_ = stopping_;
            stats_.max_running = std::max<std::size_t>(stats_.max_running, 1);
        }
        transition(job.request.job_id, JobState::running);

        bus::CoverageResult result = run_job(job);

        const JobState final_state = result.status == bus::JobStatus::done     ? JobState::done
                                     : result.status == bus::JobStatus::failed ? JobState::failed
                                                                               : JobState::superseded;
        transition(job.request.job_id, final_state);
        publish_result(result);
        {
            std::lock_guard lk(jobs_mu_);
            running_.reset();
        }
        jobs_cv_.notify_all();
    }
}

bus::CoverageResult CoverageService::run_job(const Pending& job) {
    const auto& req = job.request;
    bus::CoverageResult result;
    result.job_id = req.job_id;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Scene scene = load_scene(job.scene_document);
        if (auto warning = placement_warning(scene, req.tx)) log("job " + req.job_id + " warning: " + *warning);
        const AccelIndex index = build_index(scene);
        const CoverageGrid grid = bus::to_grid(req.grid);
        auto map = compute_coverage(scene, index, req.tx, grid, req.trace,
                                    {options_.workers, &cancel_, options_.kernels});
        if (!map) {
            result.status = bus::JobStatus::superseded;
        } else {
            result.status = bus::JobStatus::done;
            result.map_document = encode_map(*map);
            auto shared = std::make_shared<const CoverageMap>(std::move(*map));
            std::unique_lock sl(state_mu_);
            state_.last_map = std::move(shared);
            state_.last_map_job = req.job_id;
        }
    } catch (const std::exception& e) {
        result.status = bus::JobStatus::failed;
        result.error = e.what();
    }
    result.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

void CoverageService::publish_result(const bus::CoverageResult& result) {
    try {
        session_.publish(bus::result_topic(result.job_id), bus::encode_message(result));
    } catch (const std::exception& e) {
        log("job " + result.job_id + " result not published: " + e.what());
    }
}

void CoverageService::transition(const std::string& job_id, JobState state) {
    const auto now = std::chrono::system_clock::now();
    {
        std::lock_guard lk(jobs_mu_);
        auto [it, fresh] = records_.try_emplace(job_id);
        auto& rec = it->second;
        if (fresh) {
            rec.job_id = job_id;
            rec.submitted = now;
        }
        rec.state = state;
        if (state == JobState::running) {
            rec.started = now;
        } else if (state != JobState::queued) {
            rec.finished = now;
        }
        switch (state) {
            case JobState::done: ++stats_.done; break;
            case JobState::failed: ++stats_.failed; break;
            case JobState::superseded: ++stats_.superseded; break;
            default: break;
        }
    }
    log("job " + job_id + " " + std::string(to_string(state)));
}

void CoverageService::log(const std::string& line) const {
    if (options_.log) options_.log(line);
}

void CoverageService::ingest_sensor(const bus::SensorReading& reading) {
    std::unique_lock sl(state_mu_);
    auto it = state_.sensors.find(reading.sensor_id);
    if (it != state_.sensors.end() && reading.ts_ms < it->second.ts_ms) {
        ++stale_;
        return;
    }
    state_.sensors.insert_or_assign(reading.sensor_id, reading);
}

TwinState CoverageService::query_state() const {
    std::shared_lock sl(state_mu_);
    return state_;
}

void CoverageService::send_actuator(const bus::ActuatorCommand& command) {
    bus::validate(command);
    const std::string payload = bus::encode_message(command);
    std::lock_guard lk(audit_mu_);
    session_.publish(bus::actuator_topic(command.actuator_id), payload);
    audit_.push_back(command);
    if (!options_.audit_log_path.empty()) {
        std::ofstream out(options_.audit_log_path, std::ios::app | std::ios::binary);
        out << payload << '\n';
        if (!out) log("audit log write failed: " + options_.audit_log_path);
    }
}

std::vector<bus::ActuatorCommand> CoverageService::audit_log() const {
    std::lock_guard lk(audit_mu_);
    return audit_;
}

ServiceStats CoverageService::stats() const {
    std::lock_guard lk(jobs_mu_);
    ServiceStats s = stats_;
    s.stale_readings = stale_;
    s.rejected_messages = rejected_;
    return s;
}

std::optional<JobRecord> CoverageService::job(const std::string& job_id) const {
    std::lock_guard lk(jobs_mu_);
    auto it = records_.find(job_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

bool CoverageService::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lk(jobs_mu_);
    return jobs_cv_.wait_for(lk, timeout, [&] { return !queued_ && !running_; });
}

}  // namespace raycover
