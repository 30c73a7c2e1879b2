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

#include "raycover/simd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace raycover::simd {

namespace {

// Same NaN/tie semantics as the x86 min/max instructions: the second
// operand wins unless the first compares strictly less (greater).
inline double lane_min(double a, double b) { return a < b ? a : b; }
inline double lane_max(double a, double b) { return a > b ? a : b; }

void intersect_triangles4_scalar(const RayData& r, const TrianglePack4& p, double* t_out) {
    for (int k = 0; k < kLanes; ++k) {
        const double pvx = r.dy * p.e2z[k] - r.dz * p.e2y[k];
        const double pvy = r.dz * p.e2x[k] - r.dx * p.e2z[k];
        const double pvz = r.dx * p.e2y[k] - r.dy * p.e2x[k];
        const double det = p.e1x[k] * pvx + p.e1y[k] * pvy + p.e1z[k] * pvz;
        const double inv = 1.0 / det;

        const double tx = r.ox - p.v0x[k];
        const double ty = r.oy - p.v0y[k];
        const double tz = r.oz - p.v0z[k];
        const double u = (tx * pvx + ty * pvy + tz * pvz) * inv;

        const double qx = ty * p.e1z[k] - tz * p.e1y[k];
        const double qy = tz * p.e1x[k] - tx * p.e1z[k];
        const double qz = tx * p.e1y[k] - ty * p.e1x[k];
        const double v = (r.dx * qx + r.dy * qy + r.dz * qz) * inv;
        const double t = (p.e2x[k] * qx + p.e2y[k] * qy + p.e2z[k] * qz) * inv;

        const bool ok = std::fabs(det) > 1e-18 && u >= 0.0 && v >= 0.0 && (u + v) <= 1.0 && t > kSelfHitEpsilon;
        t_out[k] = ok ? t : kNoHit;
    }
}

unsigned slab_test4_scalar(const RayData& r, const BoxPack4& b, double t_max, double* t_near_out) {
    unsigned mask = 0;
    for (int k = 0; k < kLanes; ++k) {
        const double x0 = (b.lox[k] - r.ox) * r.ix;
        const double x1 = (b.hix[k] - r.ox) * r.ix;
        const double y0 = (b.loy[k] - r.oy) * r.iy;
        const double y1 = (b.hiy[k] - r.oy) * r.iy;
        const double z0 = (b.loz[k] - r.oz) * r.iz;
        const double z1 = (b.hiz[k] - r.oz) * r.iz;

        double tnear = lane_max(lane_max(lane_max(lane_min(x0, x1), lane_min(y0, y1)), lane_min(z0, z1)), 0.0);
        double tfar = lane_min(lane_min(lane_min(lane_max(x0, x1), lane_max(y0, y1)), lane_max(z0, z1)), t_max);
        t_near_out[k] = tnear;
        if (tnear <= tfar) mask |= 1u << k;
    }
    return mask;
}

const KernelTable kScalar{"scalar", &intersect_triangles4_scalar, &slab_test4_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

RayData make_ray_data(double ox, double oy, double oz, double dx, double dy, double dz) {
    // Zero direction components get a huge finite reciprocal so slab
    // products never form inf * 0.
    auto recip = [](double d) {
        const double inv = 1.0 / d;
        return std::isfinite(inv) ? inv : std::copysign(1e300, d);
    };
    return {ox, oy, oz, dx, dy, dz, recip(dx), recip(dy), recip(dz)};
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable* chosen = [] {
        const char* force = std::getenv("RAYCOVER_SIMD");
        if (force != nullptr && std::strcmp(force, "scalar") == 0) return &kScalar;
        if (const KernelTable* avx = avx2_kernels(); avx != nullptr && cpu_has_avx2()) return avx;
        return &kScalar;
    }();
    return *chosen;
}

}  // namespace raycover::simd
