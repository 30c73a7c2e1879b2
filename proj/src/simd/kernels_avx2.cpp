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

// Compiled with -mavx2 only (no FMA) so every lane rounds exactly like the
// scalar reference.

#include "raycover/simd/kernels.hpp"

#if defined(RAYCOVER_HAVE_AVX2)

#include <immintrin.h>

namespace raycover::simd {

namespace {

void intersect_triangles4_avx2(const RayData& r, const TrianglePack4& p, double* t_out) {
    const __m256d dx = _mm256_set1_pd(r.dx);
    const __m256d dy = _mm256_set1_pd(r.dy);
    const __m256d dz = _mm256_set1_pd(r.dz);

    const __m256d e1x = _mm256_load_pd(p.e1x), e1y = _mm256_load_pd(p.e1y), e1z = _mm256_load_pd(p.e1z);
    const __m256d e2x = _mm256_load_pd(p.e2x), e2y = _mm256_load_pd(p.e2y), e2z = _mm256_load_pd(p.e2z);

    const __m256d pvx = _mm256_sub_pd(_mm256_mul_pd(dy, e2z), _mm256_mul_pd(dz, e2y));
    const __m256d pvy = _mm256_sub_pd(_mm256_mul_pd(dz, e2x), _mm256_mul_pd(dx, e2z));
    const __m256d pvz = _mm256_sub_pd(_mm256_mul_pd(dx, e2y), _mm256_mul_pd(dy, e2x));
    const __m256d det = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e1x, pvx), _mm256_mul_pd(e1y, pvy)),
                                      _mm256_mul_pd(e1z, pvz));
    const __m256d inv = _mm256_div_pd(_mm256_set1_pd(1.0), det);

    const __m256d tx = _mm256_sub_pd(_mm256_set1_pd(r.ox), _mm256_load_pd(p.v0x));
    const __m256d ty = _mm256_sub_pd(_mm256_set1_pd(r.oy), _mm256_load_pd(p.v0y));
    const __m256d tz = _mm256_sub_pd(_mm256_set1_pd(r.oz), _mm256_load_pd(p.v0z));
    const __m256d u = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(tx, pvx), _mm256_mul_pd(ty, pvy)), _mm256_mul_pd(tz, pvz)), inv);

    const __m256d qx = _mm256_sub_pd(_mm256_mul_pd(ty, e1z), _mm256_mul_pd(tz, e1y));
    const __m256d qy = _mm256_sub_pd(_mm256_mul_pd(tz, e1x), _mm256_mul_pd(tx, e1z));
    const __m256d qz = _mm256_sub_pd(_mm256_mul_pd(tx, e1y), _mm256_mul_pd(ty, e1x));
    const __m256d v = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, qx), _mm256_mul_pd(dy, qy)), _mm256_mul_pd(dz, qz)), inv);
    const __m256d t = _mm256_mul_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(e2x, qx), _mm256_mul_pd(e2y, qy)), _mm256_mul_pd(e2z, qz)), inv);

    const __m256d zero = _mm256_setzero_pd();
    const __m256d abs_det = _mm256_andnot_pd(_mm256_set1_pd(-0.0), det);
    __m256d ok = _mm256_cmp_pd(abs_det, _mm256_set1_pd(1e-18), _CMP_GT_OQ);
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(u, zero, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(v, zero, _CMP_GE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(_mm256_add_pd(u, v), _mm256_set1_pd(1.0), _CMP_LE_OQ));
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(t, _mm256_set1_pd(kSelfHitEpsilon), _CMP_GT_OQ));

    _mm256_storeu_pd(t_out, _mm256_blendv_pd(_mm256_set1_pd(kNoHit), t, ok));
}

unsigned slab_test4_avx2(const RayData& r, const BoxPack4& b, double t_max, double* t_near_out) {
    const __m256d ox = _mm256_set1_pd(r.ox), oy = _mm256_set1_pd(r.oy), oz = _mm256_set1_pd(r.oz);
    const __m256d ix = _mm256_set1_pd(r.ix), iy = _mm256_set1_pd(r.iy), iz = _mm256_set1_pd(r.iz);

    const __m256d x0 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.lox), ox), ix);
    const __m256d x1 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.hix), ox), ix);
    const __m256d y0 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.loy), oy), iy);
    const __m256d y1 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.hiy), oy), iy);
    const __m256d z0 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.loz), oz), iz);
    const __m256d z1 = _mm256_mul_pd(_mm256_sub_pd(_mm256_load_pd(b.hiz), oz), iz);

    // _mm256_min_pd(a, b) == (a < b ? a : b), matching the scalar helpers.
    const __m256d tnear = _mm256_max_pd(
        _mm256_max_pd(_mm256_max_pd(_mm256_min_pd(x0, x1), _mm256_min_pd(y0, y1)), _mm256_min_pd(z0, z1)),
        _mm256_setzero_pd());
    const __m256d tfar = _mm256_min_pd(
        _mm256_min_pd(_mm256_min_pd(_mm256_max_pd(x0, x1), _mm256_max_pd(y0, y1)), _mm256_max_pd(z0, z1)),
        _mm256_set1_pd(t_max));

    _mm256_storeu_pd(t_near_out, tnear);
    return static_cast<unsigned>(_mm256_movemask_pd(_mm256_cmp_pd(tnear, tfar, _CMP_LE_OQ)));
}

const KernelTable kAvx2{"avx2", &intersect_triangles4_avx2, &slab_test4_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2; }

}  // namespace raycover::simd

#else

namespace raycover::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace raycover::simd

#endif
