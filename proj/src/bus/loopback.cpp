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

#include "raycover/bus/loopback.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "raycover/errors.hpp"

namespace raycover::bus {

namespace {

class LoopbackSession;

struct Delivery {
    std::string topic;
    std::string payload;
};

}  // namespace

struct LoopbackBroker::State {
    std::optional<Credentials> required;
    mutable std::mutex mu;
    std::condition_variable idle_cv;
    std::vector<LoopbackSession*> sessions;
    std::size_t pending = 0;  // queued + executing deliveries over all sessions
    std::size_t published = 0;
    bool duplicate = false;

    void route(std::string_view topic, std::string_view payload);
    void delivery_finished(std::size_t n) {
        std::lock_guard lk(mu);
        pending -= n;
        if (pending == 0) idle_cv.notify_all();
    }
};

namespace {

class LoopbackSession final : public BusSession {
public:
    LoopbackSession(std::shared_ptr<LoopbackBroker::State> broker, std::string client_id)
        : broker_(std::move(broker)), client_id_(std::move(client_id)) {
        worker_ = std::thread([this] { run(); });
    }

    ~LoopbackSession() override { close(); }

    void publish(std::string_view topic, std::string_view payload) override {
        if (!is_open()) throw SessionError("publish on closed session '" + client_id_ + "'");
        if (!valid_topic_name(topic)) throw ValidationError("invalid topic name '" + std::string(topic) + "'");
        broker_->route(topic, payload);
    }

    void subscribe(std::string_view filter, MessageHandler handler) override {
        if (!is_open()) throw SessionError("subscribe on closed session '" + client_id_ + "'");
        if (!valid_topic_filter(filter)) throw ValidationError("invalid topic filter '" + std::string(filter) + "'");
        std::lock_guard lk(mu_);
        subs_.push_back({std::string(filter), std::move(handler)});
    }

    bool flush(std::chrono::milliseconds) override { return is_open(); }

    void close() override {
        {
            std::lock_guard broker_lk(broker_->mu);
            std::erase(broker_->sessions, this);
        }
        std::size_t dropped = 0;
        {
            std::lock_guard lk(mu_);
            if (closed_) return;
            closed_ = true;
            dropped = queue_.size();
            queue_.clear();
        }
        cv_.notify_all();
        if (dropped) broker_->delivery_finished(dropped);
        if (worker_.joinable()) {
            if (worker_.get_id() == std::this_thread::get_id()) {
                worker_.detach();
            } else {
                worker_.join();
            }
        }
    }

    bool is_open() const override {
        std::lock_guard lk(mu_);
        return !closed_;
    }

    // Called with the broker lock held.
    bool wants(std::string_view topic) const {
        std::lock_guard lk(mu_);
        if (closed_) return false;
        for (const auto& s : subs_) {
            if (topic_matches(s.filter, topic)) return true;
        }
        return false;
    }

    // Called with the broker lock held; the broker already counted it as pending.
    void enqueue(Delivery d) {
        {
            std::lock_guard lk(mu_);
            queue_.push_back(std::move(d));
        }
        cv_.notify_one();
    }

private:
    struct Subscription {
        std::string filter;
        MessageHandler handler;
    };

    void run() {
        for (;;) {
            Delivery d;
            std::vector<MessageHandler> targets;
            {
                std::unique_lock lk(mu_);
                cv_.wait(lk, [&] { return closed_ || !queue_.empty(); });
                if (closed_) return;
                d = std::move(queue_.front());
                queue_.pop_front();
                for (const auto& s : subs_) {
                    if (topic_matches(s.filter, d.topic)) targets.push_back(s.handler);
                }
            }
            for (const auto& h : targets) h(d.topic, d.payload);
            broker_->delivery_finished(1);
        }
    }

    std::shared_ptr<LoopbackBroker::State> broker_;
    std::string client_id_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Delivery> queue_;
    std::vector<Subscription> subs_;
    bool closed_ = false;
    std::thread worker_;
};

}  // namespace

void LoopbackBroker::State::route(std::string_view topic, std::string_view payload) {
    std::lock_guard lk(mu);
    ++published;
    const int copies = duplicate ? 2 : 1;
    for (auto* s : sessions) {
        if (!s->wants(topic)) continue;
        for (int c = 0; c < copies; ++c) {
            ++pending;
            s->enqueue({std::string(topic), std::string(payload)});
        }
    }
}

LoopbackBroker::LoopbackBroker(std::optional<Credentials> required) : state_(std::make_shared<State>()) {
    state_->required = std::move(required);
}

LoopbackBroker::~LoopbackBroker() = default;

std::unique_ptr<BusSession> LoopbackBroker::connect(const std::string& client_id,
                                                    const std::optional<Credentials>& credentials) {
    if (state_->required) {
        if (!credentials || credentials->username != state_->required->username ||
            credentials->password != state_->required->password) {
            throw CredentialError("broker rejected credentials for '" + client_id + "'");
        }
    }
    auto session = std::make_unique<LoopbackSession>(state_, client_id);
    std::lock_guard lk(state_->mu);
    state_->sessions.push_back(session.get());
    return session;
}

void LoopbackBroker::set_duplicate_delivery(bool on) {
    std::lock_guard lk(state_->mu);
    state_->duplicate = on;
}

bool LoopbackBroker::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lk(state_->mu);
    return state_->idle_cv.wait_for(lk, timeout, [&] { return state_->pending == 0; });
}

std::size_t LoopbackBroker::published_count() const {
    std::lock_guard lk(state_->mu);
    return state_->published;
}

}  // namespace raycover::bus
