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
#include <memory>
#include <optional>
#include <string>

#include "raycover/bus/session.hpp"

namespace raycover::bus {

// In-process broker with the same publish/subscribe contract as an MQTT
// broker: topic filters with + and #, per-session delivery thread, per-topic
// arrival order. Used by tests and single-process deployments.
class LoopbackBroker {
public:
    explicit LoopbackBroker(std::optional<Credentials> required = std::nullopt);
    ~LoopbackBroker();

    LoopbackBroker(const LoopbackBroker&) = delete;
    LoopbackBroker& operator=(const LoopbackBroker&) = delete;

    // Throws CredentialError when the broker requires credentials that do not match.
    std::unique_ptr<BusSession> connect(const std::string& client_id,
                                        const std::optional<Credentials>& credentials = std::nullopt);

    // Delivers every routed message twice, exercising at-least-once consumers.
    void set_duplicate_delivery(bool on);

    // Blocks until no session has queued or in-flight deliveries.
    bool wait_idle(std::chrono::milliseconds timeout);

    std::size_t published_count() const;

    struct State;

private:
    std::shared_ptr<State> state_;
};

}  // namespace raycover::bus
