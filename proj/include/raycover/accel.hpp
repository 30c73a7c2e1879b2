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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "raycover/geometry.hpp"
#include "raycover/scene.hpp"
#include "raycover/simd/kernels.hpp"

namespace raycover {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

struct Hit {
    double t = 0.0;
    Vec3 point;
    Vec3 normal;  // unit, faces the incoming ray
    MaterialId material_id = 0;
    std::uint32_t triangle_index = 0;
};

// Four-wide bounding volume hierarchy over a scene's triangles. Immutable
// after construction and safe to query from many threads.
class AccelIndex {
public:
    AccelIndex() = default;

    // First hit with t > 1e-6; equal distances resolve to the lowest triangle index.
    std::optional<Hit> intersect_first(const Ray& ray) const;
    std::optional<Hit> intersect_first(const Ray& ray, const simd::KernelTable& kernels) const;

    std::size_t triangle_count() const { return normals_.size(); }
    std::size_t node_count() const { return nodes_.size(); }

private:
    friend AccelIndex build_index(const Scene& scene);

    struct Node {
        simd::BoxPack4 boxes;
        // >= 0: inner node index; < 0: leaf, ~child indexes leaves_.
        std::int32_t child[simd::kLanes];
        std::uint32_t count = 0;
    };
    struct Leaf {
        std::uint32_t first_pack = 0;
        std::uint32_t pack_count = 0;
    };

    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
    std::vector<simd::TrianglePack4> packs_;
    std::vector<std::int32_t> pack_ids_;  // kLanes per pack, -1 for unused lanes
    std::vector<Vec3> normals_;           // geometric unit normal per triangle
    std::vector<MaterialId> materials_;
    // Root is a single leaf when the tree has no inner nodes.
    std::int32_t root_ = 0;
    bool has_root_ = false;
};

AccelIndex build_index(const Scene& scene);

inline std::optional<Hit> intersect_first(const AccelIndex& index, const Ray& ray) {
    return index.intersect_first(ray);
}

}  // namespace raycover
