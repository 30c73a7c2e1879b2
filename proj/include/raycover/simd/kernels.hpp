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

// Data-parallel inner loops of the first-hit query. Each kernel has a
// scalar reference implementation and, where the target supports it, an
// AVX2 variant. Variants must produce bit-identical results: the kernel
// translation units are compiled without floating-point contraction and
// evaluate the same operations in the same order per lane.

#include <cstdint>
#include <limits>
#include <string_view>

namespace raycover::simd {

inline constexpr int kLanes = 4;

// Four triangles in structure-of-arrays form, stored as (v0, e1 = v1 - v0,
// e2 = v2 - v0). Unused lanes are all-zero, which yields det == 0 and
// therefore never reports a hit.
struct alignas(32) TrianglePack4 {
    double v0x[kLanes], v0y[kLanes], v0z[kLanes];
    double e1x[kLanes], e1y[kLanes], e1z[kLanes];
    double e2x[kLanes], e2y[kLanes], e2z[kLanes];
};

// Four axis-aligned boxes, SoA.
struct alignas(32) BoxPack4 {
    double lox[kLanes], loy[kLanes], loz[kLanes];
    double hix[kLanes], hiy[kLanes], hiz[kLanes];
};

struct RayData {
    double ox, oy, oz;
    double dx, dy, dz;
    double ix, iy, iz;  // 1 / d per axis, +-1e300 for zero components
};

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Smallest accepted hit distance; guards against re-hitting the surface a
// ray was just launched from.
inline constexpr double kSelfHitEpsilon = 1e-6;

// Writes the hit distance per lane (kNoHit when the lane misses or t <= kSelfHitEpsilon).
using IntersectTriangles4Fn = void (*)(const RayData& ray, const TrianglePack4& pack, double* t_out);

// Slab test against four boxes over [0, t_max]. Returns a 4-bit lane mask of
// boxes the ray overlaps and writes each lane's entry distance to t_near_out.
// NaN slab products (origin on a slab plane of a zero direction component)
// leave that axis unconstrained.
using SlabTest4Fn = unsigned (*)(const RayData& ray, const BoxPack4& boxes, double t_max, double* t_near_out);

struct KernelTable {
    std::string_view name;
    IntersectTriangles4Fn intersect_triangles4;
    SlabTest4Fn slab_test4;
};

const KernelTable& scalar_kernels();

// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

// Best table the running CPU supports. RAYCOVER_SIMD=scalar in the
// environment forces the reference kernels.
const KernelTable& active_kernels();

RayData make_ray_data(double ox, double oy, double oz, double dx, double dy, double dz);

}  // namespace raycover::simd
