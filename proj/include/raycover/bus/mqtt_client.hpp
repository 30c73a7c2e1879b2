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

#include <memory>
#include <optional>
#include <string>

#include "raycover/bus/session.hpp"

namespace raycover::bus {

// Connects to an MQTT 3.1.1 broker over TCP. Publishes use QoS 1 and are
// retransmitted after a reconnect until acknowledged; subscriptions are
// renewed on every reconnect. Handlers run on the session's reader thread.
//
// Unreachable broker: ConnectionError after policy.max_retries retries with
// exponential backoff. Refused credentials: CredentialError, no retries.
std::unique_ptr<BusSession> connect_mqtt(const Endpoint& endpoint, const std::string& client_id,
                                         const std::optional<Credentials>& credentials = std::nullopt,
                                         const ConnectPolicy& policy = {});

}  // namespace raycover::bus
