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

#include "support.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "raycover/bus/mqtt_packet.hpp"
#include "raycover/bus/session.hpp"

extern char** environ;

namespace testsupport {

using raycover::Vec3;
namespace mqtt = raycover::bus::mqtt;

double friis_db(double distance, double frequency_hz) {
    const double lambda = raycover::kSpeedOfLight / frequency_hz;
    return 20.0 * std::log10(lambda / (4.0 * raycover::kPi * distance));
}

namespace {

void put_vertex(std::string& obj, const Vec3& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
    obj += buf;
}

void put_quad(std::string& obj, std::size_t& n, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    for (const Vec3& p : {a, b, c, d}) put_vertex(obj, p);
    const std::size_t base = n + 1;
    obj += "f " + std::to_string(base) + " " + std::to_string(base + 1) + " " + std::to_string(base + 2) + "\n";
    obj += "f " + std::to_string(base) + " " + std::to_string(base + 2) + " " + std::to_string(base + 3) + "\n";
    n += 4;
}

}  // namespace

void add_box(std::string& obj, std::size_t& n, Vec3 lo, Vec3 hi, const std::string& material, bool with_floor) {
    obj += "usemtl " + material + "\n";
    const Vec3 p000{lo.x, lo.y, lo.z}, p100{hi.x, lo.y, lo.z}, p110{hi.x, hi.y, lo.z}, p010{lo.x, hi.y, lo.z};
    const Vec3 p001{lo.x, lo.y, hi.z}, p101{hi.x, lo.y, hi.z}, p111{hi.x, hi.y, hi.z}, p011{lo.x, hi.y, hi.z};
    put_quad(obj, n, p000, p100, p101, p001);  // south
    put_quad(obj, n, p100, p110, p111, p101);  // east
    put_quad(obj, n, p110, p010, p011, p111);  // north
    put_quad(obj, n, p010, p000, p001, p011);  // west
    put_quad(obj, n, p001, p101, p111, p011);  // roof
    if (with_floor) put_quad(obj, n, p000, p010, p110, p100);
}

void add_wall_x(std::string& obj, std::size_t& n, double x, double y0, double y1, double z0, double z1,
                const std::string& material) {
    obj += "usemtl " + material + "\n";
    put_quad(obj, n, {x, y0, z0}, {x, y1, z0}, {x, y1, z1}, {x, y0, z1});
}

std::string desk_scene_document(std::size_t triangles, double extent, std::uint64_t seed) {
    std::string obj = "# raycover-scene v1\n";
    obj += "#@material ground 0.4\n#@material concrete 0.7\n#@material glass 0.3\n";
    std::size_t n = 0;

    const std::size_t g = 40;
    const double step = 2.0 * extent / static_cast<double>(g);
    obj += "usemtl ground\n";
    for (std::size_t j = 0; j < g; ++j) {
        for (std::size_t i = 0; i < g; ++i) {
            const double x0 = -extent + i * step, y0 = -extent + j * step;
            put_quad(obj, n, {x0, y0, 0.0}, {x0 + step, y0, 0.0}, {x0 + step, y0 + step, 0.0}, {x0, y0 + step, 0.0});
        }
    }
    const std::size_t ground = 2 * g * g;
    const std::size_t buildings = triangles > ground ? (triangles - ground) / 10 : 0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-extent + 10.0, extent - 10.0);
    std::uniform_real_distribution<double> size(3.0, 8.0);
    std::uniform_real_distribution<double> height(4.0, 20.0);
    std::size_t placed = 0;
    while (placed < buildings) {
        const double cx = pos(rng), cy = pos(rng), sx = size(rng), sy = size(rng), h = height(rng);
        if (std::hypot(cx, cy) < 6.0 + std::max(sx, sy)) continue;
        add_box(obj, n, {cx - sx / 2, cy - sy / 2, 0.0}, {cx + sx / 2, cy + sy / 2, h},
                placed % 4 == 0 ? "glass" : "concrete", false);
        ++placed;
    }
    return obj;
}

raycover::bus::CoverageRequest make_request(const std::string& job_id, const std::string& scene_document,
                                            std::uint64_t rays, raycover::bus::GridParams grid) {
    raycover::bus::CoverageRequest r;
    r.job_id = job_id;
    r.tx.position = {0.0, 0.0, 10.0};
    r.grid = grid;
    r.trace.rays = rays;
    r.trace.max_depth = 3;
    r.trace.seed = 1;
    r.inline_scene = scene_document;
    return r;
}

// ---- random messages -------------------------------------------------------

namespace {

using raycover::AntennaKind;
using raycover::AntennaPattern;
using raycover::bus::ActuatorCommand;
using raycover::bus::CoverageRequest;
using raycover::bus::CoverageResult;
using raycover::bus::JobStatus;
using raycover::bus::Message;
using raycover::bus::MessageKind;
using raycover::bus::SceneRef;
using raycover::bus::SensorKind;
using raycover::bus::SensorReading;
using raycover::bus::sha256_hex;

std::string random_id(std::mt19937_64& rng) {
    static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.:";
    std::string s(1 + rng() % 40, ' ');
    for (char& c : s) c = kChars[rng() % (sizeof kChars - 1)];
    return s;
}

std::string random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    std::string s(rng() % (max_len + 1), '\0');
    for (char& c : s) c = static_cast<char>(rng() & 0xFF);
    return s;
}

double random_double(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    switch (rng() % 4) {
        case 0: return u(rng) * 1e-12;
        case 1: return std::round(u(rng));
        default: return u(rng);
    }
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    for (;;) {
        const Vec3 v{g(rng), g(rng), g(rng)};
        const double len = norm(v);
        if (len < 1e-3) continue;
        const Vec3 u = v * (1.0 / len);
        if (std::abs(norm(u) - 1.0) <= 1e-12) return u;
    }
}

CoverageRequest random_request(std::mt19937_64& rng) {
    CoverageRequest m;
    m.job_id = random_id(rng);
    m.tx.position = {random_double(rng), random_double(rng), random_double(rng)};
    m.tx.frequency_hz = 1e8 + static_cast<double>(rng() % 100'000'000'000ull);
    m.tx.antenna = rng() % 2 ? AntennaPattern{} : AntennaPattern{AntennaKind::directional, (rng() % 100) / 7.0};
    m.tx.boresight = random_unit(rng);
    const double x0 = random_double(rng), y0 = random_double(rng);
    m.grid = {x0, y0, x0 + 1 + rng() % 500, y0 + 1 + rng() % 500, 0.5 + (rng() % 20) / 4.0, random_double(rng)};
    m.trace.rays = 1 + rng() % 10'000'000'000ull;
    m.trace.max_depth = static_cast<int>(rng() % 20);
    m.trace.min_amplitude = (rng() % 3) ? 0.0 : std::ldexp(static_cast<double>(rng() % 1000), -40);
    m.trace.seed = rng();
    if (rng() % 2) {
        m.inline_scene = random_bytes(rng, 300);
    } else {
        m.scene_ref = SceneRef{"file:///scenes/" + random_id(rng) + ".obj", sha256_hex(random_bytes(rng, 50))};
    }
    return m;
}

CoverageResult random_result(std::mt19937_64& rng) {
    CoverageResult m;
    m.job_id = random_id(rng);
    m.status = static_cast<JobStatus>(rng() % 3);
    m.duration_s = std::abs(random_double(rng));
    if (m.status == JobStatus::done) m.map_document = random_bytes(rng, 500);
    if (m.status == JobStatus::failed) m.error = "error " + random_id(rng) + " \"quoted\" \xC3\xA9";
    return m;
}

SensorReading random_reading(std::mt19937_64& rng) {
    SensorReading m;
    m.sensor_id = random_id(rng);
    m.kind = static_cast<SensorKind>(rng() % 3);
    if (rng() % 3) {
        m.value = random_double(rng);
    } else {
        m.value = "state-" + random_id(rng);
    }
    m.unit = rng() % 4 ? "C" : "";
    m.ts_ms = 1 + static_cast<std::int64_t>(rng() % 4'000'000'000'000ull);
    return m;
}

ActuatorCommand random_command(std::mt19937_64& rng) {
    ActuatorCommand m;
    m.actuator_id = random_id(rng);
    m.command = "set_" + random_id(rng);
    for (std::size_t k = rng() % 5; k > 0; --k) m.args[random_id(rng)] = random_id(rng);
    m.ts_ms = static_cast<std::int64_t>(rng() % 4'000'000'000'000ull);
    return m;
}

}  // namespace

Message random_message(std::mt19937_64& rng, MessageKind kind) {
    switch (kind) {
        case MessageKind::coverage_request: return random_request(rng);
        case MessageKind::coverage_result: return random_result(rng);
        case MessageKind::sensor_reading: return random_reading(rng);
        case MessageKind::actuator_command: return random_command(rng);
    }
    return {};
}


// ---- temp dirs and processes ----------------------------------------------

TempDir::TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "raycover-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void TempDir::write(const std::string& name, const std::string& content) const {
    std::ofstream out(path_ / name, std::ios::binary);
    out << content;
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

pid_t spawn(const std::vector<std::string>& argv, const std::string& out_path, const std::string& err_path) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid = -1;
    const int rc = ::posix_spawn(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw std::runtime_error("posix_spawn failed for " + argv[0]);
    return pid;
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
    TempDir dir;
    const std::string out = dir.file("out"), err = dir.file("err");
    const pid_t pid = spawn(argv, out, err);
    int status = 0;
    ::waitpid(pid, &status, 0);
    return {decode_status(status), slurp(out), slurp(err)};
}

Child::Child(const std::vector<std::string>& argv) {
    char tmpl[] = "/tmp/raycover-child-XXXXXX";
    const int fd = ::mkstemp(tmpl);
    if (fd >= 0) ::close(fd);
    err_path_ = tmpl;
    pid_ = spawn(argv, "/dev/null", err_path_);
}

Child::~Child() {
    if (!status_ && pid_ > 0) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
    std::remove(err_path_.c_str());
}

void Child::signal(int sig) { ::kill(pid_, sig); }

std::optional<int> Child::wait(std::chrono::milliseconds timeout) {
    if (status_) return status_;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            status_ = decode_status(status);
            return status_;
        }
        if (std::chrono::steady_clock::now() > deadline) return std::nullopt;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

std::string Child::err() const { return slurp(err_path_); }

// ---- TCP broker ------------------------------------------------------------

struct TestBroker::Client {
    int fd = -1;
    std::mutex write_mu;
    std::vector<std::string> filters;
    std::uint16_t next_id = 0;
    bool connected = false;

    void send(const mqtt::Packet& p) {
        const std::string bytes = mqtt::encode(p);
        std::lock_guard lk(write_mu);
        std::string_view rest = bytes;
        while (!rest.empty()) {
            const ssize_t n = ::send(fd, rest.data(), rest.size(), MSG_NOSIGNAL);
            if (n <= 0) return;
            rest.remove_prefix(static_cast<std::size_t>(n));
        }
    }
};

TestBroker::TestBroker(std::optional<raycover::bus::Credentials> required) : required_(std::move(required)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
        throw std::runtime_error("test broker: cannot listen");
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

TestBroker::~TestBroker() {
    stop_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    drop_connections();
    std::vector<std::thread> threads;
    {
        std::lock_guard lk(mu_);
        threads.swap(threads_);
    }
    for (auto& t : threads) t.join();
}

void TestBroker::accept_loop() {
    while (!stop_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stop_) return;
            continue;
        }
        ++attempts_;
        auto client = std::make_shared<Client>();
        client->fd = fd;
        std::lock_guard lk(mu_);
        clients_.push_back(client);
        threads_.emplace_back([this, client] { serve(client); });
    }
}

void TestBroker::drop_connections() {
    std::lock_guard lk(mu_);
    for (auto& c : clients_) ::shutdown(c->fd, SHUT_RDWR);
}

void TestBroker::serve(std::shared_ptr<Client> client) {
    mqtt::PacketReader reader;
    char buf[65536];
    bool open = true;
    while (open) {
        const ssize_t n = ::recv(client->fd, buf, sizeof buf, 0);
        if (n <= 0) break;
        reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        try {
            while (auto p = reader.next()) {
                if (const auto* c = std::get_if<mqtt::Connect>(&*p)) {
                    if (required_ && (c->username != required_->username || c->password != required_->password)) {
                        client->send(mqtt::Connack{false, mqtt::kRefusedBadCredentials});
                        open = false;
                        break;
                    }
                    ++accepted_;
                    client->connected = true;
                    client->send(mqtt::Connack{false, mqtt::kAccepted});
                } else if (!client->connected) {
                    open = false;
                    break;
                } else if (const auto* pub = std::get_if<mqtt::Publish>(&*p)) {
                    route(pub->topic, pub->payload);
                    if (pub->qos > 0) client->send(mqtt::Puback{pub->packet_id});
                } else if (const auto* sub = std::get_if<mqtt::Subscribe>(&*p)) {
                    mqtt::Suback ack{sub->packet_id, {}};
                    {
                        std::lock_guard lk(mu_);
                        for (const auto& [f, qos] : sub->filters) {
                            client->filters.push_back(f);
                            ack.return_codes.push_back(1);
                        }
                    }
                    client->send(ack);
                } else if (std::holds_alternative<mqtt::Pingreq>(*p)) {
                    client->send(mqtt::Pingresp{});
                } else if (std::holds_alternative<mqtt::Disconnect>(*p)) {
                    open = false;
                    break;
                }
            }
        } catch (const std::exception&) {
            break;
        }
    }
    std::lock_guard lk(mu_);
    ::close(client->fd);
    std::erase(clients_, client);
}

void TestBroker::route(const std::string& topic, const std::string& payload) {
    std::vector<std::shared_ptr<Client>> targets;
    {
        std::lock_guard lk(mu_);
        for (const auto& c : clients_) {
            for (const auto& f : c->filters) {
                if (raycover::bus::topic_matches(f, topic)) {
                    targets.push_back(c);
                    break;
                }
            }
        }
    }
    for (const auto& c : targets) {
        mqtt::Publish out;
        out.topic = topic;
        out.payload = payload;
        out.qos = 1;
        {
            std::lock_guard lk(c->write_mu);
            c->next_id = static_cast<std::uint16_t>(c->next_id % 65535 + 1);
            out.packet_id = c->next_id;
        }
        c->send(out);
    }
}

std::uint16_t closed_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace testsupport
