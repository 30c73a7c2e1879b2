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

#include "raycover/bus/mqtt_packet.hpp"

#include "raycover/errors.hpp"

namespace raycover::bus::mqtt {

namespace {

constexpr std::size_t kMaxRemainingLength = 268'435'455;

void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v >> 8);
    out += static_cast<char>(v & 0xFF);
}

void put_str(std::string& out, std::string_view s) {
    put_u16(out, static_cast<std::uint16_t>(s.size()));
    out += s;
}

std::string frame(std::uint8_t first_byte, const std::string& body) {
    std::string out(1, static_cast<char>(first_byte));
    std::size_t len = body.size();
    do {
        std::uint8_t b = len % 128;
        len /= 128;
        if (len > 0) b |= 0x80;
        out += static_cast<char>(b);
    } while (len > 0);
    return out + body;
}

struct Cursor {
    std::string_view data;
    std::size_t pos = 0;
    std::size_t base = 0;  // stream offset of data[0]

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("mqtt: " + what, base + pos);
    }
    std::uint8_t u8() {
        if (pos + 1 > data.size()) fail("truncated packet");
        return static_cast<std::uint8_t>(data[pos++]);
    }
    std::uint16_t u16() {
        const std::uint16_t hi = u8();
        return static_cast<std::uint16_t>((hi << 8) | u8());
    }
    std::string str() {
        const std::size_t n = u16();
        if (pos + n > data.size()) fail("truncated string");
        std::string s(data.substr(pos, n));
        pos += n;
        return s;
    }
    std::string rest() {
        std::string s(data.substr(pos));
        pos = data.size();
        return s;
    }
    bool done() const { return pos == data.size(); }
};

}  // namespace

std::string encode(const Packet& packet) {
    struct Encoder {
        std::string operator()(const Connect& p) const {
            std::string body;
            put_str(body, "MQTT");
            body += static_cast<char>(4);  // protocol level 3.1.1
            std::uint8_t flags = 0;
            if (p.clean_session) flags |= 0x02;
            if (p.username) flags |= 0x80;
            if (p.password) flags |= 0x40;
            body += static_cast<char>(flags);
            put_u16(body, p.keep_alive_s);
            put_str(body, p.client_id);
            if (p.username) put_str(body, *p.username);
            if (p.password) put_str(body, *p.password);
            return frame(0x10, body);
        }
        std::string operator()(const Connack& p) const {
            std::string body;
            body += static_cast<char>(p.session_present ? 1 : 0);
            body += static_cast<char>(p.return_code);
            return frame(0x20, body);
        }
        std::string operator()(const Publish& p) const {
            std::string body;
            put_str(body, p.topic);
            if (p.qos > 0) put_u16(body, p.packet_id);
            body += p.payload;
            const std::uint8_t flags = static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | (p.qos << 1) | (p.retain ? 1 : 0));
            return frame(static_cast<std::uint8_t>(0x30 | flags), body);
        }
        std::string operator()(const Puback& p) const {
            std::string body;
            put_u16(body, p.packet_id);
            return frame(0x40, body);
        }
        std::string operator()(const Subscribe& p) const {
            std::string body;
            put_u16(body, p.packet_id);
            for (const auto& [filter, qos] : p.filters) {
                put_str(body, filter);
                body += static_cast<char>(qos);
            }
            return frame(0x82, body);
        }
        std::string operator()(const Suback& p) const {
            std::string body;
            put_u16(body, p.packet_id);
            for (auto c : p.return_codes) body += static_cast<char>(c);
            return frame(0x90, body);
        }
        std::string operator()(const Pingreq&) const { return frame(0xC0, {}); }
        std::string operator()(const Pingresp&) const { return frame(0xD0, {}); }
        std::string operator()(const Disconnect&) const { return frame(0xE0, {}); }
    };
    return std::visit(Encoder{}, packet);
}

void PacketReader::feed(std::string_view bytes) {
    if (offset_ > 0) {
        buffer_.erase(0, offset_);
        offset_ = 0;
    }
    buffer_ += bytes;
}

std::optional<Packet> PacketReader::next() {
    const std::string_view avail = std::string_view(buffer_).substr(offset_);
    if (avail.size() < 2) return std::nullopt;

    std::size_t len = 0;
    std::size_t mult = 1;
    std::size_t k = 1;
    for (;; ++k) {
        if (k >= avail.size()) return std::nullopt;
        if (k > 4) throw ParseError("mqtt: remaining length exceeds four bytes", consumed_total_ + k);
        const auto b = static_cast<std::uint8_t>(avail[k]);
        len += (b & 0x7F) * mult;
        mult *= 128;
        if ((b & 0x80) == 0) break;
    }
    if (len > kMaxRemainingLength) throw ParseError("mqtt: remaining length too large", consumed_total_ + 1);
    const std::size_t header = k + 1;
    if (avail.size() < header + len) return std::nullopt;

    const auto first = static_cast<std::uint8_t>(avail[0]);
    const auto type = static_cast<PacketType>(first >> 4);
    const std::uint8_t flags = first & 0x0F;
    Cursor c{avail.substr(header, len), 0, consumed_total_ + header};

    Packet out;
    switch (type) {
        case PacketType::connect: {
            if (c.str() != "MQTT") c.fail("unsupported protocol name");
            if (c.u8() != 4) c.fail("unsupported protocol level");
            const std::uint8_t cf = c.u8();
            Connect p;
            p.clean_session = (cf & 0x02) != 0;
            p.keep_alive_s = c.u16();
            p.client_id = c.str();
            if (cf & 0x04) {  // will topic + message, not used by this client
                c.str();
                c.str();
            }
            if (cf & 0x80) p.username = c.str();
            if (cf & 0x40) p.password = c.str();
            out = std::move(p);
            break;
        }
        case PacketType::connack: {
            Connack p;
            p.session_present = (c.u8() & 1) != 0;
            p.return_code = c.u8();
            out = p;
            break;
        }
        case PacketType::publish: {
            Publish p;
            p.dup = (flags & 0x08) != 0;
            p.qos = (flags >> 1) & 0x03;
            p.retain = (flags & 0x01) != 0;
            if (p.qos > 2) c.fail("invalid QoS");
            p.topic = c.str();
            if (p.qos > 0) p.packet_id = c.u16();
            p.payload = c.rest();
            out = std::move(p);
            break;
        }
        case PacketType::puback: out = Puback{c.u16()}; break;
        case PacketType::subscribe: {
            if (flags != 0x02) c.fail("bad SUBSCRIBE flags");
            Subscribe p;
            p.packet_id = c.u16();
            while (!c.done()) {
                std::string f = c.str();
                p.filters.emplace_back(std::move(f), c.u8());
            }
            if (p.filters.empty()) c.fail("SUBSCRIBE without filters");
            out = std::move(p);
            break;
        }
        case PacketType::suback: {
            Suback p;
            p.packet_id = c.u16();
            while (!c.done()) p.return_codes.push_back(c.u8());
            out = std::move(p);
            break;
        }
        case PacketType::pingreq: out = Pingreq{}; break;
        case PacketType::pingresp: out = Pingresp{}; break;
        case PacketType::disconnect: out = Disconnect{}; break;
        default: c.fail("unsupported packet type " + std::to_string(first >> 4));
    }
    if (!c.done()) c.fail("trailing bytes in packet");

    offset_ += header + len;
    consumed_total_ += header + len;
    return out;
}

}  // namespace raycover::bus::mqtt
