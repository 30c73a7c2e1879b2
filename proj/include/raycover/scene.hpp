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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "raycover/geometry.hpp"

namespace raycover {

inline constexpr double kDefaultReflectionAmplitude = 0.5;
inline constexpr double kMinTriangleArea = 1e-12;  // m^2

struct Material {
    std::string name;
    double reflection_amplitude = kDefaultReflectionAmplitude;  // Gamma in [0, 1]
};

using MaterialId = std::uint32_t;

struct Triangle {
    Vec3 a, b, c;
    MaterialId material_id = 0;

    double area() const { return 0.5 * norm(cross(b - a, c - a)); }
};

// Name -> reflection amplitude, as read from a material sidecar.
using MaterialTable = std::map<std::string, double, std::less<>>;

struct SceneDiagnostics {
    std::size_t dropped_degenerate = 0;
    std::vector<std::string> unresolved_materials;  // each name warned once
    std::vector<std::string> warnings;
};

// Immutable triangle soup with resolved materials.
class Scene {
public:
    Scene() = default;
    Scene(std::vector<Triangle> triangles, std::vector<Material> materials, SceneDiagnostics diagnostics = {});

    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<Material>& materials() const { return materials_; }
    const Material& material(MaterialId id) const { return materials_.at(id); }
    const Aabb& bbox() const { return bbox_; }
    const SceneDiagnostics& diagnostics() const { return diagnostics_; }
    bool empty() const { return triangles_.empty(); }

private:
    std::vector<Triangle> triangles_;
    std::vector<Material> materials_;
    Aabb bbox_;
    SceneDiagnostics diagnostics_;
};

// Parses a material sidecar: one `name gamma` pair per line, `#` comments.
// Throws ParseError (with line number) or ValidationError (gamma outside [0, 1]).
MaterialTable parse_material_table(std::string_view text);

// Parses the OBJ subset (`v`, `f`, `usemtl`; faces fan-triangulated).
// Materials come from `sidecar` plus any `#@material <name> <gamma>` lines
// embedded in the document; the sidecar wins on conflicts. Degenerate faces
// are dropped and unknown material names fall back to the default
// amplitude, both reported in Scene::diagnostics().
Scene load_scene(std::string_view obj_text, const MaterialTable& sidecar = {});

// Reads both files from disk. Throws std::runtime_error when a file cannot be read.
Scene load_scene_files(const std::string& obj_path, const std::string& material_path = {});

// Writes the scene back as a self-contained document (embedded materials,
// one vertex triple per triangle, full double precision).
std::string serialize_scene(const Scene& scene);

std::string serialize_material_table(const MaterialTable& table);

std::string read_text_file(const std::string& path);

}  // namespace raycover
