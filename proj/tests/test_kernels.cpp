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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string_view>
#include <random>

#include "doctest.h"
#include "raycover/simd/kernels.hpp"

using namespace raycover::simd;

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

RayData random_ray(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-10, 10);
    std::normal_distribution<double> g;
    double d[3] = {g(rng), g(rng), g(rng)};
    // Zero out components now and then to hit the reciprocal guard.
    for (double& c : d) {
        if (rng() % 8 == 0) c = 0.0;
    }
    double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (len == 0.0) {
        d[0] = 1.0;
        len = 1.0;
    }
    return make_ray_data(u(rng), u(rng), u(rng), d[0] / len, d[1] / len, d[2] / len);
}

TrianglePack4 random_pack(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> e(-4, 4);
    TrianglePack4 p{};
    for (int k = 0; k < kLanes; ++k) {
        if (rng() % 6 == 0) continue;  // unused lane stays all-zero
        p.v0x[k] = u(rng), p.v0y[k] = u(rng), p.v0z[k] = u(rng);
        p.e1x[k] = e(rng), p.e1y[k] = e(rng), p.e1z[k] = e(rng);
        p.e2x[k] = e(rng), p.e2y[k] = e(rng), p.e2z[k] = e(rng);
    }
    return p;
}

BoxPack4 random_boxes(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> s(0, 5);
    BoxPack4 b{};
    for (int k = 0; k < kLanes; ++k) {
        b.lox[k] = u(rng), b.loy[k] = u(rng), b.loz[k] = u(rng);
        b.hix[k] = b.lox[k] + s(rng), b.hiy[k] = b.loy[k] + s(rng), b.hiz[k] = b.loz[k] + s(rng);
        if (rng() % 10 == 0) b.hix[k] = b.lox[k];  // flat box
    }
    return b;
}

}  // namespace

TEST_CASE("scalar triangle kernel reports the textbook hit") {
    TrianglePack4 p{};
    // Lane 2: triangle in the plane x = 3.
    p.v0x[2] = 3, p.v0y[2] = -1, p.v0z[2] = -1;
    p.e1y[2] = 2;
    p.e2z[2] = 2;
    double t[kLanes];
    scalar_kernels().intersect_triangles4(make_ray_data(0, 0, 0, 1, 0, 0), p, t);
    CHECK(t[0] == kNoHit);
    CHECK(t[1] == kNoHit);
    CHECK(t[2] == 3.0);
    CHECK(t[3] == kNoHit);
}

TEST_CASE("zero direction components get a finite reciprocal") {
    const RayData r = make_ray_data(0, 0, 0, 0, -0.0, 1);
    CHECK(std::isfinite(r.ix));
    CHECK(std::isfinite(r.iy));
    CHECK(r.iz == 1.0);
}

TEST_CASE("slab test: box behind the ray is rejected, box ahead is accepted") {
    BoxPack4 b{};
    b.lox[0] = 2, b.hix[0] = 3, b.loy[0] = -1, b.hiy[0] = 1, b.loz[0] = -1, b.hiz[0] = 1;
    b.lox[1] = -3, b.hix[1] = -2, b.loy[1] = -1, b.hiy[1] = 1, b.loz[1] = -1, b.hiz[1] = 1;
    b.lox[2] = 2, b.hix[2] = 3, b.loy[2] = 5, b.hiy[2] = 6, b.loz[2] = -1, b.hiz[2] = 1;
    b.lox[3] = 20, b.hix[3] = 30, b.loy[3] = -1, b.hiy[3] = 1, b.loz[3] = -1, b.hiz[3] = 1;
    double tn[kLanes];
    const unsigned mask = scalar_kernels().slab_test4(make_ray_data(0, 0, 0, 1, 0, 0), b, 10.0, tn);
    CHECK(mask == 0b0001u);
    CHECK(tn[0] == 2.0);
}

TEST_CASE("AVX2 kernels match the scalar reference bit for bit") {
    const KernelTable* avx = avx2_kernels();
    if (avx == nullptr || !cpu_has_avx2()) {
        MESSAGE("AVX2 variant not available on this build or CPU; equivalence not exercised");
        return;
    }
    const KernelTable& ref = scalar_kernels();
    std::mt19937_64 rng(99);
    int tri_hits = 0;
    for (int n = 0; n < 200'000; ++n) {
        const RayData r = random_ray(rng);
        const TrianglePack4 p = random_pack(rng);
        double a[kLanes], b[kLanes];
        ref.intersect_triangles4(r, p, a);
        avx->intersect_triangles4(r, p, b);
        for (int k = 0; k < kLanes; ++k) {
            REQUIRE(bits(a[k]) == bits(b[k]));
            if (a[k] != kNoHit) ++tri_hits;
        }

        const BoxPack4 boxes = random_boxes(rng);
        const double tmax = (n % 3 == 0) ? kNoHit : std::uniform_real_distribution<double>(0, 30)(rng);
        double na[kLanes], nb[kLanes];
        const unsigned ma = ref.slab_test4(r, boxes, tmax, na);
        const unsigned mb = avx->slab_test4(r, boxes, tmax, nb);
        REQUIRE(ma == mb);
        for (int k = 0; k < kLanes; ++k) {
            if (ma & (1u << k)) REQUIRE(bits(na[k]) == bits(nb[k]));
        }
    }
    CHECK(tri_hits > 1000);
}

TEST_CASE("runtime dispatch picks the widest supported variant") {
    const char* force = std::getenv("RAYCOVER_SIMD");
    if (force != nullptr && std::string_view(force) == "scalar") {
        CHECK(active_kernels().name == "scalar");
    } else if (avx2_kernels() != nullptr && cpu_has_avx2()) {
        CHECK(active_kernels().name == "avx2");
    } else {
        CHECK(active_kernels().name == "scalar");
    }
}
