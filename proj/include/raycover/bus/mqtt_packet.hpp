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

// MQTT 3.1.1 control packets: the subset needed for QoS 0/1 publish and
// subscribe with keep-alive.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace raycover::bus::mqtt {

enum class PacketType : std::uint8_t {
    connect = 1,
    connack = 2,
    publish = 3,
    puback = 4,
    subscribe = 8,
    suback = 9,
    unsubscribe = 10,
    unsuback = 11,
    pingreq = 12,
    pingresp = 13,
    disconnect = 14,
};

// CONNACK return codes.
inline constexpr std::uint8_t kAccepted = 0;
inline constexpr std::uint8_t kRefusedProtocol = 1;
inline constexpr std::uint8_t kRefusedIdentifier = 2;
inline constexpr std::uint8_t kRefusedUnavailable = 3;
inline constexpr std::uint8_t kRefusedBadCredentials = 4;
inline constexpr std::uint8_t kRefusedNotAuthorized = 5;

inline constexpr std::uint8_t kSubackFailure = 0x80;

struct Connect {
    std::string client_id;
    std::optional<std::string> username;
    std::optional<std::string> password;
    std::uint16_t keep_alive_s = 30;
    bool clean_session = true;
    friend bool operator==(const Connect&, const Connect&) = default;
};

struct Connack {
    bool session_present = false;
    std::uint8_t return_code = kAccepted;
    friend bool operator==(const Connack&, const Connack&) = default;
};

struct Publish {
    std::string topic;
    std::string payload;
    std::uint8_t qos = 0;
    bool dup = false;
    bool retain = false;
    std::uint16_t packet_id = 0;  // present iff qos > 0
    friend bool operator==(const Publish&, const Publish&) = default;
};

struct Puback {
    std::uint16_t packet_id = 0;
    friend bool operator==(const Puback&, const Puback&) = default;
};

struct Subscribe {
    std::uint16_t packet_id = 0;
    std::vector<std::pair<std::string, std::uint8_t>> filters;  // filter, requested qos
    friend bool operator==(const Subscribe&, const Subscribe&) = default;
};

struct Suback {
    std::uint16_t packet_id = 0;
    std::vector<std::uint8_t> return_codes;
    friend bool operator==(const Suback&, const Suback&) = default;
};

struct Pingreq {
    friend bool operator==(const Pingreq&, const Pingreq&) = default;
};
struct Pingresp {
    friend bool operator==(const Pingresp&, const Pingresp&) = default;
};
struct Disconnect {
    friend bool operator==(const Disconnect&, const Disconnect&) = default;
};

using Packet = std::variant<Connect, Connack, Publish, Puback, Subscribe, Suback, Pingreq, Pingresp, Disconnect>;

std::string encode(const Packet& packet);

// Incremental decoder over a byte stream. next() yields complete packets;
// malformed input throws ParseError with the stream offset.
class PacketReader {
public:
    void feed(std::string_view bytes);
    std::optional<Packet> next();
    std::size_t buffered() const { return buffer_.size() - offset_; }

private:
    std::string buffer_;
    std::size_t offset_ = 0;
    std::size_t consumed_total_ = 0;
};

}  // namespace raycover::bus::mqtt
