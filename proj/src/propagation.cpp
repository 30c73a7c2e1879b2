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

#include "raycover/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "raycover/errors.hpp"

namespace raycover {

namespace {

constexpr std::uint64_t kStrataZ = 128;
constexpr std::uint64_t kStrataPhi = kRayBatch / kStrataZ;
static_assert(kStrataZ * kStrataPhi == kRayBatch);

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// SplitMix64 over a per-ray substream.
class RayStream {
public:
    RayStream(std::uint64_t seed, std::uint64_t index) : state_(mix64(seed) ^ index) {}
    double uniform() {
        state_ += 0x9E3779B97F4A7C15ull;
        return static_cast<double>(mix64(state_) >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

struct RayTracer {
    const AccelIndex& index;
    const Scene& scene;
    const Transmitter& tx;
    double plane_height;
    const TraceConfig& cfg;
    const simd::KernelTable& kernels;
    double amp0;  // lambda / (4 pi)

    void trace(std::uint64_t ray_index, std::vector<PlaneCrossing>& out) const {
        Vec3 dir = launch_direction(cfg.seed, ray_index, cfg.rays);
        const double gain = antenna_gain(tx.antenna, tx.boresight, dir);
        double reflect_sq = 1.0;  // product of Gamma^2 over bounces so far
        if (!alive(gain, reflect_sq)) return;

        Vec3 origin = tx.position;
        double travelled = 0.0;
        int bounces = 0;
        for (;;) {
            const auto hit = index.intersect_first(Ray{origin, dir}, kernels);
            const double t_end = hit ? hit->t : simd::kNoHit;

            const double cos_inc = std::fabs(dir.z);
            if (cos_inc >= kMinCrossingCosine) {
                const double t_cross = (plane_height - origin.z) / dir.z;
                if (t_cross > 0.0 && t_cross < t_end) {
                    const double d = travelled + t_cross;
                    const double amp = amp0 / d;
                    out.push_back({origin.x + dir.x * t_cross, origin.y + dir.y * t_cross,
                                   gain * amp * amp * reflect_sq, d, cos_inc, bounces, ray_index});
                }
            }

            if (!hit || bounces + 1 > cfg.max_depth) return;
            const double gamma = scene.material(hit->material_id).reflection_amplitude;
            reflect_sq *= gamma * gamma;
            if (!alive(gain, reflect_sq)) return;

            travelled += hit->t;
            origin = hit->point;
            dir = normalized(reflect(dir, hit->normal));
            ++bounces;
        }
    }

    // Path amplitude without spreading: sqrt(gain * prod Gamma^2) * lambda / (4 pi).
    bool alive(double gain, double reflect_sq) const {
        const double amplitude = std::sqrt(gain * reflect_sq) * amp0;
        return amplitude > 0.0 && amplitude >= cfg.min_amplitude;
    }
};

}  // namespace

void validate(const Transmitter& tx) {
    if (!(tx.frequency_hz > 0.0) || !std::isfinite(tx.frequency_hz)) {
        throw ValidationError("tx.frequency_hz must be positive");
    }
    if (!(std::isfinite(tx.position.x) && std::isfinite(tx.position.y) && std::isfinite(tx.position.z))) {
        throw ValidationError("tx position must be finite");
    }
    if (tx.antenna.kind == AntennaKind::directional && !(tx.antenna.exponent >= 0.0)) {
        throw ValidationError("tx.antenna.exponent must be >= 0");
    }
    if (!(std::fabs(norm(tx.boresight) - 1.0) <= 1e-9)) {
        throw ValidationError("tx.boresight must be a unit vector");
    }
}

void validate(const TraceConfig& cfg) {
    if (cfg.rays < 1) throw ValidationError("trace.rays must be >= 1");
    if (cfg.max_depth < 0) throw ValidationError("trace.max_depth must be >= 0");
    if (!(cfg.min_amplitude >= 0.0) || !std::isfinite(cfg.min_amplitude)) {
        throw ValidationError("trace.min_amplitude must be >= 0");
    }
}

std::optional<std::string> placement_warning(const Scene& scene, const Transmitter& tx) {
    if (scene.empty() || scene.bbox().inflated(10.0).contains(tx.position)) return std::nullopt;
    return "transmitter lies more than 10 m outside the scene bounds";
}

double antenna_gain(const AntennaPattern& pattern, const Vec3& boresight, const Vec3& direction) {
    if (pattern.kind == AntennaKind::isotropic) return 1.0;
    const double c = dot(boresight, direction);
    if (c <= 0.0) return 0.0;
    return 2.0 * (pattern.exponent + 1.0) * std::pow(c, pattern.exponent);
}

Vec3 launch_direction(std::uint64_t seed, std::uint64_t index, std::uint64_t total) {
    RayStream rng(seed, index);
    double u = rng.uniform();
    double v = rng.uniform();
    const std::uint64_t batch_end = (index / kRayBatch + 1) * kRayBatch;
    if (batch_end <= total) {
        const std::uint64_t stratum = index % kRayBatch;
        u = (static_cast<double>(stratum / kStrataPhi) + u) / static_cast<double>(kStrataZ);
        v = (static_cast<double>(stratum % kStrataPhi) + v) / static_cast<double>(kStrataPhi);
    }
    // Archimedes: z uniform in [-1, 1] and phi uniform gives a uniform sphere.
    const double z = 1.0 - 2.0 * u;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * v;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

bool trace_coverage_batches(const AccelIndex& index, const Scene& scene, const Transmitter& tx, double plane_height,
                            const TraceConfig& cfg, const CrossingSink& sink, const TraceOptions& options) {
    validate(tx);
    validate(cfg);
    const simd::KernelTable& kernels = options.kernels ? *options.kernels : simd::active_kernels();
    const RayTracer tracer{index, scene, tx, plane_height, cfg, kernels, tx.wavelength() / (4.0 * kPi)};

    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<PlaneCrossing>> buffers(workers);
    std::vector<PlaneCrossing> merged;

    for (std::uint64_t begin = 0; begin < cfg.rays; begin += kRayBatch) {
        if (options.cancel && options.cancel->load(std::memory_order_relaxed)) return false;
        const std::uint64_t end = std::min(cfg.rays, begin + kRayBatch);
        const std::uint64_t n = end - begin;
        const unsigned w_count = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));

        auto run_range = [&](unsigned w) {
            auto& buf = buffers[w];
            buf.clear();
            const std::uint64_t lo = begin + n * w / w_count;
            const std::uint64_t hi = begin + n * (w + 1) / w_count;
            for (std::uint64_t r = lo; r < hi; ++r) tracer.trace(r, buf);
        };

        if (w_count == 1) {
            run_range(0);
            sink(buffers[0]);
            continue;
        }
        {
            std::vector<std::jthread> pool;
            pool.reserve(w_count - 1);
            for (unsigned w = 1; w < w_count; ++w) pool.emplace_back(run_range, w);
            run_range(0);
        }
        // Contiguous ranges merged in worker order reproduce serial ray order.
        merged.clear();
        for (unsigned w = 0; w < w_count; ++w) merged.insert(merged.end(), buffers[w].begin(), buffers[w].end());
        sink(merged);
    }
    return true;
}

std::vector<PlaneCrossing> trace_coverage_rays(const AccelIndex& index, const Scene& scene, const Transmitter& tx,
                                               double plane_height, const TraceConfig& cfg,
                                               const TraceOptions& options) {
    std::vector<PlaneCrossing> all;
    trace_coverage_batches(
        index, scene, tx, plane_height, cfg,
        [&](std::span<const PlaneCrossing> batch) { all.insert(all.end(), batch.begin(), batch.end()); }, options);
    return all;
}

}  // namespace raycover
