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

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace raycover::bus {

// Invoked on the session's delivery context, once per received message.
// Messages from one topic reach a handler in arrival order. Handlers must
// return quickly; long work belongs on another thread.
using MessageHandler = std::function<void(const std::string& topic, const std::string& payload)>;

// Publish/subscribe connection to a broker. One logical owner per session.
class BusSession {
public:
    virtual ~BusSession() = default;

    // At-least-once towards the broker. Throws SessionError when closed,
    // ValidationError for a malformed topic name.
    virtual void publish(std::string_view topic, std::string_view payload) = 0;

    // Throws SessionError when closed, ValidationError for a malformed filter.
    virtual void subscribe(std::string_view topic_filter, MessageHandler handler) = 0;

    // Waits until every publish so far is acknowledged by the broker.
    virtual bool flush(std::chrono::milliseconds timeout) = 0;

    virtual void close() = 0;
    virtual bool is_open() const = 0;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 1883;
};

struct Credentials {
    std::string username;
    std::string password;
};

// Retry policy for the initial connect and for reconnects.
struct ConnectPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{10'000};
    std::chrono::seconds keep_alive{30};
    std::chrono::milliseconds io_timeout{5'000};
};

// Backoff before retry `attempt` (1-based): initial * 2^(attempt-1), capped.
std::chrono::milliseconds backoff_delay(const ConnectPolicy& policy, int attempt);

// MQTT topic-name rules: non-empty, no wildcards, no NUL, at most 65535 bytes.
bool valid_topic_name(std::string_view topic);

// MQTT filter rules: '+' fills a whole level, '#' only as the last level.
bool valid_topic_filter(std::string_view filter);

// MQTT 3.1.1 matching, including the rule that wildcards at the first level
// do not match topics starting with '$'.
bool topic_matches(std::string_view filter, std::string_view topic);

}  // namespace raycover::bus
