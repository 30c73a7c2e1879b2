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

#include "raycover/accel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace raycover {

namespace {

constexpr std::size_t kLeafSize = 4;
constexpr std::size_t kMaxLeafSize = 16;
constexpr int kBins = 16;
constexpr double kTraversalCost = 1.0;
constexpr double kIntersectCost = 1.0;

struct BuildNode {
    Aabb box;
    int left = -1;
    int right = -1;
    std::uint32_t first = 0;
    std::uint32_t count = 0;
    bool leaf() const { return left < 0; }
};

class BinaryBuilder {
public:
    BinaryBuilder(const std::vector<Aabb>& boxes, const std::vector<Vec3>& centroids)
        : boxes_(boxes), centroids_(centroids), order_(boxes.size()) {
        std::iota(order_.begin(), order_.end(), 0u);
    }

    std::vector<BuildNode> build() {
        if (!order_.empty()) build_range(0, static_cast<std::uint32_t>(order_.size()));
        return std::move(nodes_);
    }

    const std::vector<std::uint32_t>& order() const { return order_; }

private:
    int build_range(std::uint32_t first, std::uint32_t count) {
        BuildNode node;
        Aabb centroid_box;
        for (std::uint32_t i = first; i < first + count; ++i) {
            node.box.expand(boxes_[order_[i]]);
            centroid_box.expand(centroids_[order_[i]]);
        }
        node.first = first;
        node.count = count;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (count <= kLeafSize) return id;

        const Vec3 extent = centroid_box.hi - centroid_box.lo;
        int axis = 0;
        if (extent.y > extent[axis]) axis = 1;
        if (extent.z > extent[axis]) axis = 2;

        std::uint32_t mid = first + count / 2;
        if (extent[axis] > 0.0) {
            mid = sah_split(first, count, axis, centroid_box, node.box);
            if (mid == first) return id;  // leaf is cheaper
        } else {
            // Coincident centroids: split by position to keep the tree balanced.
            std::sort(order_.begin() + first, order_.begin() + first + count);
        }

        const int left = build_range(first, mid - first);
        const int right = build_range(mid, first + count - mid);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    // Returns the partition point, or `first` when keeping a leaf is cheaper.
    std::uint32_t sah_split(std::uint32_t first, std::uint32_t count, int axis, const Aabb& cbox, const Aabb& box) {
        const double lo = cbox.lo[axis];
        const double scale = kBins / (cbox.hi[axis] - lo);
        auto bin_of = [&](std::uint32_t tri) {
            const int b = static_cast<int>((centroids_[tri][axis] - lo) * scale);
            return std::clamp(b, 0, kBins - 1);
        };

        std::array<Aabb, kBins> bin_box{};
        std::array<std::uint32_t, kBins> bin_count{};
        for (std::uint32_t i = first; i < first + count; ++i) {
            const int b = bin_of(order_[i]);
            bin_box[b].expand(boxes_[order_[i]]);
            ++bin_count[b];
        }

        std::array<double, kBins - 1> left_area{}, right_area{};
        std::array<std::uint32_t, kBins - 1> left_n{}, right_n{};
        Aabb acc;
        std::uint32_t n = 0;
        for (int b = 0; b < kBins - 1; ++b) {
            acc.expand(bin_box[b]);
            n += bin_count[b];
            left_area[b] = acc.surface_area();
            left_n[b] = n;
        }
        acc = Aabb{};
        n = 0;
        for (int b = kBins - 1; b > 0; --b) {
            acc.expand(bin_box[b]);
            n += bin_count[b];
            right_area[b - 1] = acc.surface_area();
            right_n[b - 1] = n;
        }

        double best_cost = std::numeric_limits<double>::infinity();
        int best_bin = -1;
        for (int b = 0; b < kBins - 1; ++b) {
            if (left_n[b] == 0 || right_n[b] == 0) continue;
            const double cost = left_area[b] * left_n[b] + right_area[b] * right_n[b];
            if (cost < best_cost) {
                best_cost = cost;
                best_bin = b;
            }
        }
        if (best_bin < 0) {
            std::sort(order_.begin() + first, order_.begin() + first + count);
            return first + count / 2;
        }

        const double parent_area = std::max(box.surface_area(), 1e-300);
        const double split_cost = kTraversalCost + kIntersectCost * best_cost / parent_area;
        if (count <= kMaxLeafSize && split_cost >= kIntersectCost * count) return first;

        auto it = std::stable_partition(order_.begin() + first, order_.begin() + first + count,
                                        [&](std::uint32_t tri) { return bin_of(tri) <= best_bin; });
        return static_cast<std::uint32_t>(it - order_.begin());
    }

    const std::vector<Aabb>& boxes_;
    const std::vector<Vec3>& centroids_;
    std::vector<std::uint32_t> order_;
    std::vector<BuildNode> nodes_;
};

}  // namespace

AccelIndex build_index(const Scene& scene) {
    AccelIndex index;
    const auto& tris = scene.triangles();
    if (tris.empty()) return index;

    std::vector<Aabb> boxes(tris.size());
    std::vector<Vec3> centroids(tris.size());
    double scale = 1.0;
    for (std::size_t i = 0; i < tris.size(); ++i) {
        const auto& t = tris[i];
        boxes[i].expand(t.a);
        boxes[i].expand(t.b);
        boxes[i].expand(t.c);
        centroids[i] = boxes[i].centroid();
        for (const Vec3& p : {t.a, t.b, t.c}) {
            scale = std::max({scale, std::fabs(p.x), std::fabs(p.y), std::fabs(p.z)});
        }
        index.normals_.push_back(normalized(cross(t.b - t.a, t.c - t.a)));
        index.materials_.push_back(t.material_id);
    }
    // Boxes are padded so rounding in the slab test can never cull a
    // triangle the exact intersection test would accept.
    const double pad = 1e-9 * scale;

    BinaryBuilder builder(boxes, centroids);
    const std::vector<BuildNode> bnodes = builder.build();
    const auto& order = builder.order();

    auto emit_leaf = [&](const BuildNode& bn) -> std::int32_t {
        AccelIndex::Leaf leaf;
        leaf.first_pack = static_cast<std::uint32_t>(index.packs_.size());
        for (std::uint32_t k = 0; k < bn.count; k += simd::kLanes) {
            simd::TrianglePack4 pack{};
            for (int lane = 0; lane < simd::kLanes; ++lane) {
                if (k + lane >= bn.count) {
                    index.pack_ids_.push_back(-1);
                    continue;
                }
                const std::uint32_t id = order[bn.first + k + lane];
                const auto& t = tris[id];
                const Vec3 e1 = t.b - t.a;
                const Vec3 e2 = t.c - t.a;
                pack.v0x[lane] = t.a.x, pack.v0y[lane] = t.a.y, pack.v0z[lane] = t.a.z;
                pack.e1x[lane] = e1.x, pack.e1y[lane] = e1.y, pack.e1z[lane] = e1.z;
                pack.e2x[lane] = e2.x, pack.e2y[lane] = e2.y, pack.e2z[lane] = e2.z;
                index.pack_ids_.push_back(static_cast<std::int32_t>(id));
            }
            index.packs_.push_back(pack);
        }
        leaf.pack_count = static_cast<std::uint32_t>(index.packs_.size()) - leaf.first_pack;
        index.leaves_.push_back(leaf);
        return ~static_cast<std::int32_t>(index.leaves_.size() - 1);
    };

    // Collapse the binary tree into four-wide nodes by repeatedly opening
    // the largest inner child.
    auto emit = [&](auto&& self, int bid) -> std::int32_t {
        const BuildNode& bn = bnodes[bid];
        if (bn.leaf()) return emit_leaf(bn);

        std::vector<int> kids{bn.left, bn.right};
        while (kids.size() < static_cast<std::size_t>(simd::kLanes)) {
            int pick = -1;
            double best_area = -1.0;
            for (std::size_t k = 0; k < kids.size(); ++k) {
                const BuildNode& c = bnodes[kids[k]];
                if (!c.leaf() && c.box.surface_area() > best_area) {
                    best_area = c.box.surface_area();
                    pick = static_cast<int>(k);
                }
            }
            if (pick < 0) break;
            const BuildNode& opened = bnodes[kids[pick]];
            kids[pick] = opened.left;
            kids.push_back(opened.right);
        }

        const auto node_id = static_cast<std::int32_t>(index.nodes_.size());
        index.nodes_.emplace_back();
        AccelIndex::Node node{};
        node.count = static_cast<std::uint32_t>(kids.size());
        for (int lane = 0; lane < simd::kLanes; ++lane) {
            if (lane >= static_cast<int>(kids.size())) {
                node.child[lane] = 0;
                continue;
            }
            const Aabb b = bnodes[kids[lane]].box.inflated(pad);
            node.boxes.lox[lane] = b.lo.x, node.boxes.loy[lane] = b.lo.y, node.boxes.loz[lane] = b.lo.z;
            node.boxes.hix[lane] = b.hi.x, node.boxes.hiy[lane] = b.hi.y, node.boxes.hiz[lane] = b.hi.z;
            node.child[lane] = self(self, kids[lane]);
        }
        index.nodes_[node_id] = node;
        return node_id;
    };

    index.root_ = emit(emit, 0);
    index.has_root_ = true;
    return index;
}

std::optional<Hit> AccelIndex::intersect_first(const Ray& ray) const {
    return intersect_first(ray, simd::active_kernels());
}

std::optional<Hit> AccelIndex::intersect_first(const Ray& ray, const simd::KernelTable& kernels) const {
    if (!has_root_) return std::nullopt;

    const simd::RayData rd = simd::make_ray_data(ray.origin.x, ray.origin.y, ray.origin.z, ray.direction.x,
                                                 ray.direction.y, ray.direction.z);
    double best_t = simd::kNoHit;
    std::int32_t best_id = -1;

    struct Entry {
        std::int32_t code;
        double t_near;
    };
    thread_local std::vector<Entry> stack;
    stack.clear();
    stack.push_back({root_, 0.0});

    alignas(32) double t_lane[simd::kLanes];
    while (!stack.empty()) {
        const Entry e = stack.back();
        stack.pop_back();
        if (e.t_near > best_t) continue;

        if (e.code < 0) {
            const Leaf& leaf = leaves_[~e.code];
            for (std::uint32_t p = leaf.first_pack; p < leaf.first_pack + leaf.pack_count; ++p) {
                kernels.intersect_triangles4(rd, packs_[p], t_lane);
                for (int lane = 0; lane < simd::kLanes; ++lane) {
                    const double t = t_lane[lane];
                    if (t == simd::kNoHit) continue;
                    const std::int32_t id = pack_ids_[p * simd::kLanes + lane];
                    if (t < best_t || (t == best_t && id < best_id)) {
                        best_t = t;
                        best_id = id;
                    }
                }
            }
            continue;
        }

        const Node& node = nodes_[e.code];
        unsigned mask = kernels.slab_test4(rd, node.boxes, best_t, t_lane);
        mask &= (1u << node.count) - 1u;
        Entry hits[simd::kLanes];
        int n = 0;
        for (int lane = 0; lane < simd::kLanes; ++lane) {
            if (mask & (1u << lane)) hits[n++] = {node.child[lane], t_lane[lane]};
        }
        // Farthest first so the nearest child is popped next.
        std::sort(hits, hits + n, [](const Entry& a, const Entry& b) { return a.t_near > b.t_near; });
        for (int k = 0; k < n; ++k) stack.push_back(hits[k]);
    }

    if (best_id < 0) return std::nullopt;
    Hit hit;
    hit.t = best_t;
    hit.point = ray.origin + ray.direction * best_t;
    hit.normal = normals_[best_id];
    if (dot(hit.normal, ray.direction) > 0.0) hit.normal = -hit.normal;
    hit.material_id = materials_[best_id];
    hit.triangle_index = static_cast<std::uint32_t>(best_id);
    return hit;
}

}  // namespace raycover
