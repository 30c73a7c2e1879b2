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

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raycover/accel.hpp"
#include "raycover/geometry.hpp"
#include "raycover/scene.hpp"

namespace raycover {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Crossings flatter than this are dropped; their estimator weight 1/cos
// would be unbounded.
inline constexpr double kMinCrossingCosine = 0.05;

// Rays are traced, accumulated and checked for cancellation in batches of
// this size. Every full batch is one stratified sweep of the sphere.
inline constexpr std::uint64_t kRayBatch = 65'536;

enum class AntennaKind { isotropic, directional };

struct AntennaPattern {
    AntennaKind kind = AntennaKind::isotropic;
    double exponent = 0.0;  // directional only, >= 0

    friend bool operator==(const AntennaPattern&, const AntennaPattern&) = default;
};

struct Transmitter {
    Vec3 position;
    double frequency_hz = 2.4e9;
    AntennaPattern antenna;
    Vec3 boresight{0.0, 1.0, 0.0};

    double wavelength() const { return kSpeedOfLight / frequency_hz; }
    friend bool operator==(const Transmitter&, const Transmitter&) = default;
};

// Throws ValidationError on a non-positive frequency, a negative exponent or
// a boresight that is not unit length within 1e-9.
void validate(const Transmitter& tx);

// Non-fatal placement check: a transmitter more than 10 m outside the scene
// bounds is probably a coordinate mix-up.
std::optional<std::string> placement_warning(const Scene& scene, const Transmitter& tx);

struct TraceConfig {
    std::uint64_t rays = 1'000'000;
    int max_depth = 3;
    double min_amplitude = 0.0;
    std::uint64_t seed = 1;

    friend bool operator==(const TraceConfig&, const TraceConfig&) = default;
};

void validate(const TraceConfig& cfg);

struct PlaneCrossing {
    double x = 0.0, y = 0.0;    // position on the measurement plane (m)
    double h_sq = 0.0;          // squared path-coefficient amplitude
    double path_length = 0.0;   // unfolded length from the transmitter (m)
    double cos_incidence = 1.0; // |cos| between ray and plane normal
    int bounces = 0;
    std::uint64_t ray = 0;      // launching ray index

    friend bool operator==(const PlaneCrossing&, const PlaneCrossing&) = default;
};

// Linear gain in `direction`. Directional patterns follow
// g_max * max(cos psi, 0)^p with g_max = 2 (p + 1), which has unit mean
// over the sphere.
double antenna_gain(const AntennaPattern& pattern, const Vec3& boresight, const Vec3& direction);

// Launch direction of ray `index` out of `total`. Rays inside a complete
// batch of kRayBatch are jittered within one cell of an equal-area
// (cos theta, phi) stratification; rays of a trailing partial batch are
// independent uniform draws. Either way each ray depends only on
// (seed, index, total), using the generator substream seed-mix XOR index.
Vec3 launch_direction(std::uint64_t seed, std::uint64_t index, std::uint64_t total);

struct TraceOptions {
    unsigned workers = 0;                          // 0: hardware concurrency
    const std::atomic<bool>* cancel = nullptr;     // polled between batches
    const simd::KernelTable* kernels = nullptr;    // null: runtime dispatch
};

// Receives each batch's crossings in ascending ray order.
using CrossingSink = std::function<void(std::span<const PlaneCrossing>)>;

// Traces cfg.rays rays and streams plane crossings batch by batch. Returns
// false when cancelled before all batches ran.
bool trace_coverage_batches(const AccelIndex& index, const Scene& scene, const Transmitter& tx, double plane_height,
                            const TraceConfig& cfg, const CrossingSink& sink, const TraceOptions& options = {});

// Collects every crossing; convenient for tests and small runs.
std::vector<PlaneCrossing> trace_coverage_rays(const AccelIndex& index, const Scene& scene, const Transmitter& tx,
                                               double plane_height, const TraceConfig& cfg,
                                               const TraceOptions& options = {});

}  // namespace raycover
