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

#include "raycover/scene.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "raycover/errors.hpp"

namespace raycover {

namespace {

constexpr std::string_view kSceneTag = "# raycover-scene";
constexpr std::string_view kMaterialDirective = "#@material";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& out) {
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

double parse_double(std::string_view tok, std::size_t line, const char* what) {
    double v = 0.0;
    if (!parse_number(tok, v)) {
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" + std::string(tok) + "'", line);
    }
    return v;
}

// Accepts an optional leading version tag; anything other than v1 is rejected.
void check_version_tag(std::string_view line, std::size_t line_no) {
    if (line.substr(0, kSceneTag.size()) != kSceneTag) return;
    const auto version = trim(line.substr(kSceneTag.size()));
    if (version != "v1") {
        throw ParseError("line " + std::to_string(line_no) + ": unsupported scene format version '" +
                             std::string(version) + "'",
                         line_no);
    }
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        fn(trim(raw), ++line_no);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

void add_material_entry(MaterialTable& table, std::string_view name, std::string_view gamma_tok, std::size_t line) {
    const double gamma = parse_double(gamma_tok, line, "reflection amplitude");
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ValidationError("line " + std::to_string(line) + ": reflection amplitude for '" + std::string(name) +
                              "' must lie in [0, 1]");
    }
    table.insert_or_assign(std::string(name), gamma);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Scene::Scene(std::vector<Triangle> triangles, std::vector<Material> materials, SceneDiagnostics diagnostics)
    : triangles_(std::move(triangles)), materials_(std::move(materials)), diagnostics_(std::move(diagnostics)) {
    if (!triangles_.empty() && materials_.empty()) {
        throw ValidationError("scene has triangles but no materials");
    }
    for (const auto& m : materials_) {
        if (!(m.reflection_amplitude >= 0.0 && m.reflection_amplitude <= 1.0)) {
            throw ValidationError("material '" + m.name + "' reflection amplitude outside [0, 1]");
        }
    }
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
        const auto& t = triangles_[i];
        if (t.material_id >= materials_.size()) {
            throw ValidationError("triangle " + std::to_string(i) + " references unknown material id");
        }
        if (!(t.area() > kMinTriangleArea)) {
            throw ValidationError("triangle " + std::to_string(i) + " is degenerate");
        }
        bbox_.expand(t.a);
        bbox_.expand(t.b);
        bbox_.expand(t.c);
    }
}

MaterialTable parse_material_table(std::string_view text) {
    MaterialTable table;
    bool first = true;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        if (first) {
            check_version_tag(line, line_no);
            first = false;
        }
        if (line.front() == '#') return;
        const auto toks = split_ws(line);
        if (toks.size() != 2) {
            throw ParseError("line " + std::to_string(line_no) + ": expected '<name> <gamma>'", line_no);
        }
        add_material_entry(table, toks[0], toks[1], line_no);
    });
    return table;
}

Scene load_scene(std::string_view obj_text, const MaterialTable& sidecar) {
    std::vector<Vec3> vertices;
    struct Face {
        std::size_t a, b, c;
        std::string material;
    };
    std::vector<Face> faces;
    MaterialTable embedded;
    std::string current_material;
    bool first = true;

    for_each_line(obj_text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        if (first) {
            check_version_tag(line, line_no);
            first = false;
        }
        const auto toks = split_ws(line);
        if (toks[0] == kMaterialDirective) {
            if (toks.size() != 3) {
                throw ParseError("line " + std::to_string(line_no) + ": expected '#@material <name> <gamma>'", line_no);
            }
            add_material_entry(embedded, toks[1], toks[2], line_no);
            return;
        }
        if (line.front() == '#') return;

        if (toks[0] == "v") {
            if (toks.size() < 4 || toks.size() > 5) {
                throw ParseError("line " + std::to_string(line_no) + ": vertex needs 3 coordinates", line_no);
            }
            vertices.push_back({parse_double(toks[1], line_no, "coordinate"),
                                parse_double(toks[2], line_no, "coordinate"),
                                parse_double(toks[3], line_no, "coordinate")});
        } else if (toks[0] == "f") {
            if (toks.size() < 4) {
                throw ParseError("line " + std::to_string(line_no) + ": face needs at least 3 vertices", line_no);
            }
            std::vector<std::size_t> idx;
            for (std::size_t k = 1; k < toks.size(); ++k) {
                const auto ref = toks[k].substr(0, toks[k].find('/'));
                long long i = 0;
                if (!parse_number(ref, i) || i == 0) {
                    throw ParseError("line " + std::to_string(line_no) + ": bad vertex reference '" +
                                         std::string(toks[k]) + "'",
                                     line_no);
                }
                const long long resolved = i > 0 ? i - 1 : static_cast<long long>(vertices.size()) + i;
                if (resolved < 0 || resolved >= static_cast<long long>(vertices.size())) {
                    throw ParseError("line " + std::to_string(line_no) + ": vertex reference out of range", line_no);
                }
                idx.push_back(static_cast<std::size_t>(resolved));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                faces.push_back({idx[0], idx[k], idx[k + 1], current_material});
            }
        } else if (toks[0] == "usemtl") {
            if (toks.size() != 2) {
                throw ParseError("line " + std::to_string(line_no) + ": usemtl needs one name", line_no);
            }
            current_material = std::string(toks[1]);
        }
        // Other OBJ records (vn, vt, g, o, s, mtllib, ...) carry nothing we use.
    });

    MaterialTable table = embedded;
    for (const auto& [name, gamma] : sidecar) table.insert_or_assign(name, gamma);

    SceneDiagnostics diag;
    std::vector<Material> materials;
    std::unordered_map<std::string, MaterialId> ids;
    auto material_for = [&](const std::string& name) -> MaterialId {
        Material m{name.empty() ? "default" : name, kDefaultReflectionAmplitude};
        if (auto it = ids.find(m.name); it != ids.end()) return it->second;
        if (auto it = table.find(m.name); it != table.end()) {
            m.reflection_amplitude = it->second;
        } else if (!name.empty()) {
            diag.unresolved_materials.push_back(name);
            diag.warnings.push_back("material '" + name + "' not declared; using default reflection amplitude 0.5");
        }
        const auto id = static_cast<MaterialId>(materials.size());
        ids.emplace(m.name, id);
        materials.push_back(std::move(m));
        return id;
    };

    std::vector<Triangle> triangles;
    triangles.reserve(faces.size());
    for (const auto& f : faces) {
        Triangle t{vertices[f.a], vertices[f.b], vertices[f.c], 0};
        if (!(t.area() > kMinTriangleArea)) {
            ++diag.dropped_degenerate;
            continue;
        }
        t.material_id = material_for(f.material);
        triangles.push_back(t);
    }
    if (diag.dropped_degenerate > 0) {
        diag.warnings.push_back("dropped " + std::to_string(diag.dropped_degenerate) + " degenerate face(s)");
    }
    return Scene(std::move(triangles), std::move(materials), std::move(diag));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scene load_scene_files(const std::string& obj_path, const std::string& material_path) {
    const std::string obj = read_text_file(obj_path);
    MaterialTable table;
    if (!material_path.empty()) table = parse_material_table(read_text_file(material_path));
    return load_scene(obj, table);
}

std::string serialize_scene(const Scene& scene) {
    std::string out = "# raycover-scene v1\n";
    for (const auto& m : scene.materials()) {
        out += std::string(kMaterialDirective) + " " + m.name + " " + format_double(m.reflection_amplitude) + "\n";
    }
    for (const auto& t : scene.triangles()) {
        for (const Vec3& p : {t.a, t.b, t.c}) {
            out += "v " + format_double(p.x) + " " + format_double(p.y) + " " + format_double(p.z) + "\n";
        }
    }
    MaterialId current = static_cast<MaterialId>(-1);
    std::size_t base = 1;
    for (const auto& t : scene.triangles()) {
        if (t.material_id != current) {
            current = t.material_id;
            out += "usemtl " + scene.material(current).name + "\n";
        }
        out += "f " + std::to_string(base) + " " + std::to_string(base + 1) + " " + std::to_string(base + 2) + "\n";
        base += 3;
    }
    return out;
}

std::string serialize_material_table(const MaterialTable& table) {
    std::string out = "# raycover-scene v1\n";
    for (const auto& [name, gamma] : table) out += name + " " + format_double(gamma) + "\n";
    return out;
}

}  // namespace raycover
