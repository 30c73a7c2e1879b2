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

#include <condition_variable>
#include <mutex>
#include <random>
#include <thread>

#include "doctest.h"
#include "raycover/bus/loopback.hpp"
#include "raycover/bus/messages.hpp"
#include "raycover/errors.hpp"

using namespace raycover;
using namespace raycover::bus;
using namespace std::chrono_literals;

namespace {

struct Inbox {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::pair<std::string, std::string>> items;

    MessageHandler handler() {
        return [this](const std::string& topic, const std::string& payload) {
            std::lock_guard lock(mu);
            items.emplace_back(topic, payload);
            cv.notify_all();
        };
    }
    bool wait_for(std::size_t n, std::chrono::milliseconds timeout = 2s) {
        std::unique_lock lock(mu);
        return cv.wait_for(lock, timeout, [&] { return items.size() >= n; });
    }
    std::size_t size() {
        std::lock_guard lock(mu);
        return items.size();
    }
};

}  // namespace

TEST_CASE("topic name and filter validity") {
    CHECK(valid_topic_name("dt/sensors/t1"));
    CHECK(valid_topic_name("/"));
    CHECK_FALSE(valid_topic_name(""));
    CHECK_FALSE(valid_topic_name("dt/+/x"));
    CHECK_FALSE(valid_topic_name("dt/#"));
    CHECK_FALSE(valid_topic_name(std::string("a\0b", 3)));
    CHECK_FALSE(valid_topic_name(std::string(65536, 'a')));

    CHECK(valid_topic_filter("dt/sensors/#"));
    CHECK(valid_topic_filter("#"));
    CHECK(valid_topic_filter("+/+/x"));
    CHECK_FALSE(valid_topic_filter("dt/#/x"));
    CHECK_FALSE(valid_topic_filter("dt/sen#"));
    CHECK_FALSE(valid_topic_filter("dt/a+"));
    CHECK_FALSE(valid_topic_filter(""));
}

TEST_CASE("topic matching") {
    CHECK(topic_matches("dt/sensors/#", "dt/sensors/t1"));
    CHECK(topic_matches("dt/sensors/#", "dt/sensors/a/b"));
    CHECK(topic_matches("dt/sensors/#", "dt/sensors"));
    CHECK_FALSE(topic_matches("dt/sensors/#", "dt/actuators/x"));
    CHECK(topic_matches("dt/+/t1", "dt/sensors/t1"));
    CHECK_FALSE(topic_matches("dt/+", "dt/sensors/t1"));
    CHECK(topic_matches("+/+", "/x"));
    CHECK(topic_matches("dt/coverage/request", "dt/coverage/request"));
    CHECK_FALSE(topic_matches("dt/coverage/request", "dt/coverage/request/"));
    CHECK(topic_matches("#", "anything/at/all"));
    CHECK_FALSE(topic_matches("#", "$SYS/uptime"));
    CHECK_FALSE(topic_matches("+/uptime", "$SYS/uptime"));
    CHECK(topic_matches("$SYS/#", "$SYS/uptime"));
}

TEST_CASE("backoff doubles from the initial delay and is capped") {
    ConnectPolicy p;
    CHECK(backoff_delay(p, 1) == 500ms);
    CHECK(backoff_delay(p, 2) == 1000ms);
    CHECK(backoff_delay(p, 3) == 2000ms);
    CHECK(backoff_delay(p, 5) == 8000ms);
    CHECK(backoff_delay(p, 6) == 10'000ms);
    CHECK(backoff_delay(p, 60) == 10'000ms);
}

TEST_CASE("loopback: a subscriber receives a reading on its topic") {
    LoopbackBroker broker;
    auto sub = broker.connect("sub");
    auto pub = broker.connect("pub");
    Inbox inbox;
    sub->subscribe("dt/sensors/t1", inbox.handler());
    const std::string payload = encode_message(SensorReading{"t1", SensorKind::temperature, 21.5, "C", 1700000000000});
    pub->publish(sensor_topic("t1"), payload);
    REQUIRE(inbox.wait_for(1));
    CHECK(inbox.items[0].first == "dt/sensors/t1");
    CHECK(decode_as<SensorReading>(inbox.items[0].second).value == std::variant<double, std::string>(21.5));
}

TEST_CASE("loopback: wildcard subscription, per-topic order, and no cross-talk") {
    LoopbackBroker broker;
    auto sub = broker.connect("sub");
    auto other = broker.connect("other");
    auto pub = broker.connect("pub");
    Inbox all, none;
    sub->subscribe("dt/sensors/#", all.handler());
    other->subscribe("dt/actuators/+", none.handler());
    for (int k = 0; k < 200; ++k) pub->publish("dt/sensors/s" + std::to_string(k % 3), std::to_string(k));
    REQUIRE(all.wait_for(200));
    CHECK(broker.wait_idle(2s));
    CHECK(none.size() == 0);
    std::map<std::string, int> last;
    for (const auto& [topic, payload] : all.items) {
        const int v = std::stoi(payload);
        if (last.contains(topic)) CHECK(v > last[topic]);
        last[topic] = v;
    }
    CHECK(broker.published_count() == 200);
}

TEST_CASE("loopback: a session does not need to subscribe to publish") {
    LoopbackBroker broker;
    auto pub = broker.connect("pub");
    CHECK_NOTHROW(pub->publish("dt/x", "y"));
    CHECK(pub->flush(1s));
}

TEST_CASE("loopback: invalid topics and closed sessions") {
    LoopbackBroker broker;
    auto s = broker.connect("s");
    CHECK_THROWS_AS(s->publish("dt/+", "x"), ValidationError);
    CHECK_THROWS_AS(s->subscribe("dt/#/x", [](const std::string&, const std::string&) {}), ValidationError);
    CHECK(s->is_open());
    s->close();
    CHECK_FALSE(s->is_open());
    CHECK_THROWS_AS(s->publish("dt/x", "y"), SessionError);
    CHECK_THROWS_AS(s->subscribe("dt/x", [](const std::string&, const std::string&) {}), SessionError);
    CHECK_NOTHROW(s->close());
}

TEST_CASE("loopback: closed subscribers stop receiving") {
    LoopbackBroker broker;
    auto sub = broker.connect("sub");
    auto pub = broker.connect("pub");
    Inbox inbox;
    sub->subscribe("a/#", inbox.handler());
    pub->publish("a/1", "x");
    REQUIRE(inbox.wait_for(1));
    sub->close();
    pub->publish("a/2", "y");
    CHECK(broker.wait_idle(2s));
    CHECK(inbox.size() == 1);
}

TEST_CASE("loopback: credentials") {
    LoopbackBroker broker(Credentials{"user", "pw"});
    CHECK_THROWS_AS(broker.connect("a"), CredentialError);
    CHECK_THROWS_AS(broker.connect("a", Credentials{"user", "wrong"}), CredentialError);
    CHECK_NOTHROW(broker.connect("a", Credentials{"user", "pw"}));
}

TEST_CASE("loopback: duplicate delivery mode delivers each message twice") {
    LoopbackBroker broker;
    broker.set_duplicate_delivery(true);
    auto sub = broker.connect("sub");
    auto pub = broker.connect("pub");
    Inbox inbox;
    sub->subscribe("t", inbox.handler());
    pub->publish("t", "once");
    REQUIRE(inbox.wait_for(2));
    CHECK(broker.wait_idle(2s));
    CHECK(inbox.size() == 2);
}

TEST_CASE("loopback: a handler may publish from the delivery context") {
    LoopbackBroker broker;
    auto echo = broker.connect("echo");
    auto client = broker.connect("client");
    Inbox replies;
    echo->subscribe("ping", [&](const std::string&, const std::string& payload) { echo->publish("pong", payload); });
    client->subscribe("pong", replies.handler());
    for (int k = 0; k < 20; ++k) client->publish("ping", std::to_string(k));
    REQUIRE(replies.wait_for(20));
    CHECK(replies.items.back().second == "19");
}
