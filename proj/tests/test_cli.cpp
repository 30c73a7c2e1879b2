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

#include <csignal>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "raycover/bus/mqtt_client.hpp"
#include "raycover/coverage.hpp"
#include "support.hpp"

using namespace raycover;
using namespace std::chrono_literals;
using testsupport::run_process;

namespace {

const std::string kCli = RAYCOVER_CLI;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string run_config(const std::string& scene, const std::string& map, const std::string& extra_tx = "") {
    return R"({
  "scene": {"path": ")" + scene + R"("},
  "tx": {"x": 0.5, "y": 0.5, "z": 11.5)" + extra_tx + R"(},
  "grid": {"x0": -5, "y0": -5, "x1": 6, "y1": 6, "cell_size": 1.0, "height": 1.5},
  "trace": {"rays": 1000000, "max_depth": 2, "seed": 3, "workers": 2},
  "output": {"map": ")" + map + R"(", "heatmap": "out.ppm", "db_range": [-80, -50]}
})";
}

bool single_error_line(const std::string& err, const std::string& prefix) {
    return err.starts_with(prefix) && err.find('\n') == err.size() - 1;
}

bool wait_for_text(testsupport::Child& child, const std::string& text, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
        if (child.err().find(text) != std::string::npos) return true;
        std::this_thread::sleep_for(20ms);
    }
    return false;
}

std::string serve_config(std::uint16_t port, int retries = 0) {
    return R"({"broker": {"host": "127.0.0.1", "port": )" + std::to_string(port) +
           R"(, "client_id": "svc", "retries": )" + std::to_string(retries) + R"(}, "trace": {"workers": 1}})";
}

struct ResultInbox {
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::string, bus::CoverageResult> results;

    bus::MessageHandler handler() {
        return [this](const std::string&, const std::string& payload) {
            auto r = bus::decode_as<bus::CoverageResult>(payload);
            std::lock_guard lk(mu);
            results.emplace(r.job_id, std::move(r));
            cv.notify_all();
        };
    }
    std::optional<bus::CoverageResult> wait(const std::string& id, std::chrono::milliseconds timeout) {
        std::unique_lock lk(mu);
        if (!cv.wait_for(lk, timeout, [&] { return results.contains(id); })) return std::nullopt;
        return results.at(id);
    }
};

}  // namespace

TEST_CASE("run: free-space config reproduces Friis at the centre cell") {
    testsupport::TempDir dir;
    dir.write("empty.obj", "# raycover-scene v1\n");
    dir.write("run.json", run_config("empty.obj", "cov.map", R"(, "frequency_hz": 2.4e9)"));
    const auto r = run_process({kCli, "run", "--config", dir.file("run.json")});
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("rays: 1000000") != std::string::npos);

    const CoverageMap map = load_map(dir.file("cov.map"));
    const auto cell = world_to_cell(map.grid, 0.5, 0.5);
    REQUIRE(cell);
    const double db = 10 * std::log10(map.gain_at(cell->i, cell->j));
    CHECK(std::abs(db - testsupport::friis_db(10.0, 2.4e9)) <= 0.5);

    const std::string ppm = read_file(dir.file("out.ppm"));
    CHECK(ppm.starts_with("P6\n11 11\n255\n"));
    CHECK(ppm.size() == 13 + 11 * 11 * 3);

    // Same config, same bytes.
    const std::string first = read_file(dir.file("cov.map"));
    REQUIRE(run_process({kCli, "run", "--config", dir.file("run.json")}).exit_code == 0);
    CHECK(read_file(dir.file("cov.map")) == first);
}

TEST_CASE("run: config and input errors map to exit codes") {
    testsupport::TempDir dir;
    dir.write("empty.obj", "");

    // run_config() leaves frequency_hz out unless asked.
    dir.write("nofreq.json", run_config("empty.obj", "m.map"));
    dir.write("withfreq.json", run_config("empty.obj", "m.map", R"(, "frequency_hz": 2.4e9)"));
    CHECK(run_process({kCli, "run", "--config", dir.file("withfreq.json")}).exit_code == 0);
    const auto r = run_process({kCli, "run", "--config", dir.file("nofreq.json")});
    CHECK(r.exit_code == 2);
    CHECK(single_error_line(r.err, "error:config: "));
    CHECK(r.err.find("frequency_hz") != std::string::npos);

    dir.write("noscene.json", run_config("missing.obj", "m.map", R"(, "frequency_hz": 2.4e9)"));
    const auto s = run_process({kCli, "run", "--config", dir.file("noscene.json")});
    CHECK(s.exit_code == 3);
    CHECK(single_error_line(s.err, "error:scene: "));

    dir.write("bad.obj", "v 0 0 0\nv 1 0\n");
    dir.write("badscene.json", run_config("bad.obj", "m.map", R"(, "frequency_hz": 2.4e9)"));
    const auto b = run_process({kCli, "run", "--config", dir.file("badscene.json")});
    CHECK(b.exit_code == 3);
    CHECK(b.err.find("line 2") != std::string::npos);

    dir.write("malformed.json", "{\"scene\": ");
    const auto m = run_process({kCli, "run", "--config", dir.file("malformed.json")});
    CHECK(m.exit_code == 2);
    CHECK(single_error_line(m.err, "error:config: "));

    const auto missing = run_process({kCli, "run", "--config", dir.file("absent.json")});
    CHECK(missing.exit_code == 2);

    const auto usage = run_process({kCli, "run"});
    CHECK(usage.exit_code == 2);
    CHECK(single_error_line(usage.err, "error:usage: "));
    CHECK(run_process({kCli}).exit_code == 2);
    CHECK(run_process({kCli, "bogus"}).exit_code == 2);
}

TEST_CASE("render: output, range and map errors") {
    testsupport::TempDir dir;
    CoverageMap map;
    map.grid = make_grid(0, 0, 3, 2, 1);
    map.gain = {1e-6, 1e-9, 0, 1e-12, 1e-7, 1e-8};
    map.hits = {3, 2, 0, 1, 4, 4};
    save_map(map, dir.file("m.map"));

    const auto ok = run_process({kCli, "render", "--map", dir.file("m.map"), "--out", dir.file("m.ppm"), "--palette",
                                 "plasma", "--range", "-130,-50"});
    INFO(ok.err);
    REQUIRE(ok.exit_code == 0);
    CHECK(read_file(dir.file("m.ppm")) == encode_ppm(render_heatmap(map, "plasma", -130, -50)));

    const auto rev = run_process({kCli, "render", "--map", dir.file("m.map"), "--out", dir.file("x.ppm"), "--range",
                                  "-40,-140"});
    CHECK(rev.exit_code == 2);
    CHECK(single_error_line(rev.err, "error:range: "));
    CHECK(run_process({kCli, "render", "--map", dir.file("m.map"), "--out", dir.file("x.ppm"), "--range", "abc"})
              .exit_code == 2);
    const auto pal =
        run_process({kCli, "render", "--map", dir.file("m.map"), "--out", dir.file("x.ppm"), "--palette", "jet"});
    CHECK(pal.exit_code == 2);
    CHECK(single_error_line(pal.err, "error:palette: "));

    std::string doc = read_file(dir.file("m.map"));
    doc.replace(0, doc.find('\n'), "# raycover-map v7");
    dir.write("corrupt.map", doc);
    const auto bad = run_process({kCli, "render", "--map", dir.file("corrupt.map"), "--out", dir.file("x.ppm")});
    CHECK(bad.exit_code == 3);
    CHECK(single_error_line(bad.err, "error:map: "));
    CHECK(run_process({kCli, "render", "--map", dir.file("none.map"), "--out", dir.file("x.ppm")}).exit_code == 3);
}

TEST_CASE("serve: unreachable broker exits 4") {
    testsupport::TempDir dir;
    dir.write("serve.json", serve_config(testsupport::closed_port(), 1));
    const auto r = run_process({kCli, "serve", "--config", dir.file("serve.json")});
    CHECK(r.exit_code == 4);
    CHECK(single_error_line(r.err, "error:broker: "));
}

TEST_CASE("serve: refused credentials exit 4") {
    testsupport::TestBroker broker(bus::Credentials{"svc", "pw"});
    testsupport::TempDir dir;
    dir.write("serve.json", R"({"broker": {"host": "127.0.0.1", "port": )" + std::to_string(broker.port()) +
                                R"(, "username": "svc", "password": "nope"}})");
    const auto r = run_process({kCli, "serve", "--config", dir.file("serve.json")});
    CHECK(r.exit_code == 4);
    CHECK(broker.connect_attempts() == 1);
}

TEST_CASE("serve: answers requests and supersedes the running job on SIGTERM") {
    testsupport::TestBroker broker;
    testsupport::TempDir dir;
    dir.write("serve.json", serve_config(broker.port()));
    testsupport::Child child({kCli, "serve", "--config", dir.file("serve.json")});
    REQUIRE(wait_for_text(child, "serving on", 10s));

    auto client = bus::connect_mqtt({"127.0.0.1", broker.port()}, "client");
    ResultInbox inbox;
    client->subscribe("dt/coverage/result/+", inbox.handler());

    const bus::GridParams grid{-20, -20, 20, 20, 2.0, 1.5};
    client->publish(bus::kRequestTopic, bus::encode_message(testsupport::make_request("quick", "", 65536, grid)));
    const auto quick = inbox.wait("quick", 30s);
    REQUIRE(quick);
    CHECK(quick->status == bus::JobStatus::done);

    const std::string scene = testsupport::desk_scene_document(4000, 60.0, 3);
    client->publish(bus::kRequestTopic,
                    bus::encode_message(testsupport::make_request("long", scene, 100 * 65536, grid)));
    REQUIRE(wait_for_text(child, "job long running", 10s));
    child.signal(SIGTERM);
    const auto code = child.wait(10s);
    REQUIRE(code);
    CHECK(*code == 0);
    const auto long_result = inbox.wait("long", 5s);
    REQUIRE(long_result);
    CHECK(long_result->status == bus::JobStatus::superseded);
    client->close();
}
