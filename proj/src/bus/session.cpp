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

#include "raycover/bus/session.hpp"

#include <algorithm>
#include <vector>

namespace raycover::bus {

namespace {

std::vector<std::string_view> levels(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto slash = s.find('/', start);
        if (slash == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, slash - start));
        start = slash + 1;
    }
}

}  // namespace

std::chrono::milliseconds backoff_delay(const ConnectPolicy& policy, int attempt) {
    auto delay = policy.initial_backoff;
    for (int k = 1; k < attempt && delay < policy.max_backoff; ++k) delay *= 2;
    return std::min(delay, policy.max_backoff);
}

bool valid_topic_name(std::string_view topic) {
    if (topic.empty() || topic.size() > 65535) return false;
    return std::none_of(topic.begin(), topic.end(), [](char c) { return c == '+' || c == '#' || c == '\0'; });
}

bool valid_topic_filter(std::string_view filter) {
    if (filter.empty() || filter.size() > 65535 || filter.find('\0') != std::string_view::npos) return false;
    const auto lv = levels(filter);
    for (std::size_t k = 0; k < lv.size(); ++k) {
        const auto l = lv[k];
        if (l.find('#') != std::string_view::npos && (l != "#" || k + 1 != lv.size())) return false;
        if (l.find('+') != std::string_view::npos && l != "+") return false;
    }
    return true;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
    if (!topic.empty() && topic.front() == '$' && !filter.empty() && (filter.front() == '+' || filter.front() == '#')) {
        return false;
    }
    const auto f = levels(filter);
    const auto t = levels(topic);
    std::size_t k = 0;
    for (; k < f.size(); ++k) {
        if (f[k] == "#") return true;  // also matches the parent level
        if (k >= t.size()) return false;
        if (f[k] != "+" && f[k] != t[k]) return false;
    }
    return k == t.size();
}

}  // namespace raycover::bus
