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

#include "raycover/bus/mqtt_client.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "raycover/bus/mqtt_packet.hpp"
#include "raycover/errors.hpp"

namespace raycover::bus {

namespace {

using Clock = std::chrono::steady_clock;

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

bool send_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

Socket open_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw ConnectionError("cannot resolve '" + ep.host + "': " + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    Socket result;
    for (addrinfo* ai = res; ai != nullptr && !result.valid(); ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!s.valid()) continue;
        const int flags = ::fcntl(s.fd(), F_GETFL, 0);
        ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
        if (rc < 0 && errno == EINPROGRESS) {
            pollfd p{s.fd(), POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
            if (rc == 1) {
                int err = 0;
                socklen_t len = sizeof err;
                ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                errno = err;
            } else {
                rc = -1;
                errno = ETIMEDOUT;
            }
        }
        if (rc != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        ::fcntl(s.fd(), F_SETFL, flags);
        result = std::move(s);
    }
    ::freeaddrinfo(res);
    if (!result.valid()) {
        throw ConnectionError("cannot connect to " + ep.host + ":" + port + ": " + last_error);
    }
    return result;
}

// Reads until one complete packet is available or the deadline passes.
std::optional<mqtt::Packet> read_packet(int fd, mqtt::PacketReader& reader, Clock::time_point deadline) {
    for (;;) {
        if (auto p = reader.next()) return p;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) return std::nullopt;
        pollfd p{fd, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) return std::nullopt;
        char buf[4096];
        const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0) return std::nullopt;
        reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    }
}

class MqttSession final : public BusSession {
public:
    MqttSession(Endpoint ep, std::string client_id, std::optional<Credentials> creds, ConnectPolicy policy)
        : ep_(std::move(ep)), client_id_(std::move(client_id)), creds_(std::move(creds)), policy_(policy) {}

    ~MqttSession() override { close(); }

    void start() {
        establish();
        reader_ = std::thread([this] { run(); });
    }

    void publish(std::string_view topic, std::string_view payload) override {
        if (!valid_topic_name(topic)) throw ValidationError("invalid topic name '" + std::string(topic) + "'");
        mqtt::Publish p;
        p.topic = std::string(topic);
        p.payload = std::string(payload);
        p.qos = 1;
        {
            std::lock_guard lk(mu_);
            check_open();
            p.packet_id = allocate_id();
            inflight_.emplace(p.packet_id, p);
        }
        // A failed write surfaces as a lost connection on the reader side,
        // which retransmits everything still in flight.
        send(mqtt::encode(p));
    }

    void subscribe(std::string_view filter, MessageHandler handler) override {
        if (!valid_topic_filter(filter)) throw ValidationError("invalid topic filter '" + std::string(filter) + "'");
        mqtt::Subscribe s;
        s.filters.emplace_back(std::string(filter), 1);
        {
            std::lock_guard lk(mu_);
            check_open();
            subs_.push_back({std::string(filter), std::move(handler)});
            s.packet_id = allocate_id();
            awaiting_suback_.insert(s.packet_id);
        }
        send(mqtt::encode(s));
        if (std::this_thread::get_id() == reader_.get_id()) return;
        std::unique_lock lk(mu_);
        const bool acked = cv_.wait_for(lk, policy_.io_timeout, [&] {
            return closed_ || failed_ || !awaiting_suback_.contains(s.packet_id);
        });
        if (refused_subs_.erase(s.packet_id)) {
            throw SessionError("broker refused subscription to '" + std::string(filter) + "'");
        }
        if (!acked || failed_) throw SessionError("no SUBACK for '" + std::string(filter) + "'");
    }

    bool flush(std::chrono::milliseconds timeout) override {
        std::unique_lock lk(mu_);
        return cv_.wait_for(lk, timeout, [&] { return closed_ || failed_ || inflight_.empty(); }) && !closed_ &&
               !failed_;
    }

    void close() override {
        {
            std::lock_guard lk(mu_);
            if (closed_) return;
            closed_ = true;
        }
        cv_.notify_all();
        {
            std::lock_guard wl(write_mu_);
            if (sock_.valid()) {
                send_all(sock_.fd(), mqtt::encode(mqtt::Disconnect{}));
                ::shutdown(sock_.fd(), SHUT_RDWR);
            }
        }
        if (reader_.joinable()) {
            if (reader_.get_id() == std::this_thread::get_id()) {
                reader_.detach();
            } else {
                reader_.join();
            }
        }
    }

    bool is_open() const override {
        std::lock_guard lk(mu_);
        return !closed_ && !failed_;
    }

private:
    struct Subscription {
        std::string filter;
        MessageHandler handler;
    };

    void check_open() const {
        if (closed_) throw SessionError("session '" + client_id_ + "' is closed");
        if (failed_) throw SessionError("session '" + client_id_ + "' lost its broker connection");
    }

    std::uint16_t allocate_id() {
        for (;;) {
            next_id_ = static_cast<std::uint16_t>(next_id_ + 1);
            if (next_id_ != 0 && !inflight_.contains(next_id_) && !awaiting_suback_.contains(next_id_)) return next_id_;
        }
    }

    void send(const std::string& bytes) {
        std::lock_guard wl(write_mu_);
        if (sock_.valid() && send_all(sock_.fd(), bytes)) last_send_ = Clock::now();
    }

    // One connect attempt: TCP, CONNECT, CONNACK. Throws ConnectionError or
    // CredentialError.
    Socket attempt() {
        Socket s = open_tcp(ep_, policy_.io_timeout);
        mqtt::Connect c;
        c.client_id = client_id_;
        c.keep_alive_s = static_cast<std::uint16_t>(policy_.keep_alive.count());
        if (creds_) {
            c.username = creds_->username;
            c.password = creds_->password;
        }
        if (!send_all(s.fd(), mqtt::encode(c))) throw ConnectionError("connection dropped during CONNECT");
        mqtt::PacketReader reader;
        auto p = read_packet(s.fd(), reader, Clock::now() + policy_.io_timeout);
        if (!p) throw ConnectionError("no CONNACK from " + ep_.host);
        const auto* ack = std::get_if<mqtt::Connack>(&*p);
        if (ack == nullptr) throw ConnectionError("expected CONNACK from " + ep_.host);
        if (ack->return_code == mqtt::kRefusedBadCredentials || ack->return_code == mqtt::kRefusedNotAuthorized) {
            throw CredentialError("broker rejected credentials for '" + client_id_ + "'");
        }
        if (ack->return_code != mqtt::kAccepted) {
            throw ConnectionError("broker refused connection, code " + std::to_string(ack->return_code));
        }
        reader_state_ = std::move(reader);
        return s;
    }

    void establish() {
        std::string last;
        for (int i = 0; i <= policy_.max_retries; ++i) {
            if (i > 0) {
                std::unique_lock lk(mu_);
                if (cv_.wait_for(lk, backoff_delay(policy_, i), [&] { return closed_; })) {
                    throw ConnectionError("session closed while reconnecting");
                }
            }
            try {
                Socket s = attempt();
                std::lock_guard wl(write_mu_);
                sock_ = std::move(s);
                last_send_ = Clock::now();
                return;
            } catch (const ConnectionError& e) {
                last = e.what();
            }
        }
        throw ConnectionError(last + " (after " + std::to_string(policy_.max_retries) + " retries)");
    }

    // Reader thread only: re-establish the connection, renew subscriptions,
    // retransmit unacknowledged publishes.
    bool reconnect() {
        {
            std::lock_guard wl(write_mu_);
            sock_.reset();
        }
        try {
            establish();
        } catch (const std::exception&) {
            {
                std::lock_guard lk(mu_);
                failed_ = true;
            }
            cv_.notify_all();
            return false;
        }
        std::vector<std::string> out;
        {
            std::lock_guard lk(mu_);
            if (!subs_.empty()) {
                mqtt::Subscribe s;
                s.packet_id = allocate_id();
                for (const auto& sub : subs_) s.filters.emplace_back(sub.filter, 1);
                out.push_back(mqtt::encode(s));
            }
            for (auto& [id, p] : inflight_) {
                p.dup = true;
                out.push_back(mqtt::encode(p));
            }
        }
        for (const auto& bytes : out) send(bytes);
        return true;
    }

    void run() {
        const auto keep_alive = std::chrono::duration_cast<std::chrono::milliseconds>(policy_.keep_alive);
        auto last_recv = Clock::now();
        bool ping_outstanding = false;
        char buf[65536];
        for (;;) {
            {
                std::lock_guard lk(mu_);
                if (closed_) return;
            }
            int fd;
            Clock::time_point last_send;
            {
                std::lock_guard wl(write_mu_);
                fd = sock_.fd();
                last_send = last_send_;
            }
            bool lost = false;
            pollfd pfd{fd, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, 200);
            if (rc > 0) {
                const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
                if (n > 0) {
                    last_recv = Clock::now();
                    ping_outstanding = false;
                    reader_state_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
                    try {
                        while (auto p = reader_state_.next()) handle(*p);
                    } catch (const ParseError&) {
                        lost = true;
                    }
                } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
                    lost = true;
                }
            } else if (rc < 0 && errno != EINTR) {
                lost = true;
            }
            const auto now = Clock::now();
            if (!lost && keep_alive.count() > 0) {
                if (ping_outstanding && now - last_recv > keep_alive + keep_alive / 2) {
                    lost = true;
                } else if (!ping_outstanding && now - last_send >= keep_alive) {
                    send(mqtt::encode(mqtt::Pingreq{}));
                    ping_outstanding = true;
                }
            }
            if (lost) {
                {
                    std::lock_guard lk(mu_);
                    if (closed_) return;
                }
                reader_state_ = {};
                if (!reconnect()) return;
                last_recv = Clock::now();
                ping_outstanding = false;
            }
        }
    }

    void handle(const mqtt::Packet& packet) {
        if (const auto* p = std::get_if<mqtt::Publish>(&packet)) {
            std::vector<MessageHandler> targets;
            {
                std::lock_guard lk(mu_);
                for (const auto& s : subs_) {
                    if (topic_matches(s.filter, p->topic)) targets.push_back(s.handler);
                }
            }
            for (const auto& h : targets) h(p->topic, p->payload);
            if (p->qos > 0) send(mqtt::encode(mqtt::Puback{p->packet_id}));
        } else if (const auto* a = std::get_if<mqtt::Puback>(&packet)) {
            std::lock_guard lk(mu_);
            inflight_.erase(a->packet_id);
            if (inflight_.empty()) cv_.notify_all();
        } else if (const auto* s = std::get_if<mqtt::Suback>(&packet)) {
            {
                std::lock_guard lk(mu_);
                if (awaiting_suback_.erase(s->packet_id)) {
                    for (auto code : s->return_codes) {
                        if (code == mqtt::kSubackFailure) refused_subs_.insert(s->packet_id);
                    }
                }
            }
            cv_.notify_all();
        }
    }

    const Endpoint ep_;
    const std::string client_id_;
    const std::optional<Credentials> creds_;
    const ConnectPolicy policy_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::vector<Subscription> subs_;
    std::map<std::uint16_t, mqtt::Publish> inflight_;
    std::set<std::uint16_t> awaiting_suback_;
    std::set<std::uint16_t> refused_subs_;
    std::uint16_t next_id_ = 0;
    bool closed_ = false;
    bool failed_ = false;

    std::mutex write_mu_;
    Socket sock_;
    Clock::time_point last_send_ = Clock::now();

    mqtt::PacketReader reader_state_;  // reader thread, or establish() before it starts
    std::thread reader_;
};

}  // namespace

std::unique_ptr<BusSession> connect_mqtt(const Endpoint& endpoint, const std::string& client_id,
                                         const std::optional<Credentials>& credentials, const ConnectPolicy& policy) {
    if (policy.max_retries < 0) throw ValidationError("max_retries must be >= 0");
    auto session = std::make_unique<MqttSession>(endpoint, client_id, credentials, policy);
    session->start();
    return session;
}

}  // namespace raycover::bus
