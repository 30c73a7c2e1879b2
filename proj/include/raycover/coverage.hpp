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

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "raycover/propagation.hpp"
#include "raycover/scene.hpp"

namespace raycover {

inline constexpr double kDefaultGridHeight = 1.5;  // m above ground
inline constexpr double kDefaultDbLow = -140.0;
inline constexpr double kDefaultDbHigh = -40.0;

// Cell (i, j) covers [x0 + i*cell, x0 + (i+1)*cell) x [y0 + j*cell, y0 + (j+1)*cell).
struct CoverageGrid {
    double x0 = 0.0;
    double y0 = 0.0;
    double cell_size = 1.0;
    std::size_t ni = 0;
    std::size_t nj = 0;
    double height = kDefaultGridHeight;

    std::size_t cell_count() const { return ni * nj; }
    // Row-major by j: index = j * ni + i.
    std::size_t flat(std::size_t i, std::size_t j) const { return j * ni + i; }
    double cell_area() const { return cell_size * cell_size; }
    friend bool operator==(const CoverageGrid&, const CoverageGrid&) = default;
};

struct CellIndex {
    std::size_t i = 0;
    std::size_t j = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct MapMeta {
    std::uint64_t seed = 0;
    std::uint64_t rays = 0;
    int max_depth = 0;
    double min_amplitude = 0.0;
    Transmitter tx;
    double duration_s = 0.0;  // wall clock; not persisted
};

struct CoverageMap {
    CoverageGrid grid;
    std::vector<double> gain;          // linear path gain per cell
    std::vector<std::uint64_t> hits;   // crossings per cell
    MapMeta meta;

    double gain_at(std::size_t i, std::size_t j) const { return gain[grid.flat(i, j)]; }
    std::uint64_t hits_at(std::size_t i, std::size_t j) const { return hits[grid.flat(i, j)]; }
};

// n_i = ceil((x1 - x0) / cell), n_j likewise.
CoverageGrid make_grid(double x0, double y0, double x1, double y1, double cell_size,
                       double height = kDefaultGridHeight);

std::optional<CellIndex> world_to_cell(const CoverageGrid& grid, double x, double y);

Vec3 cell_center(const CoverageGrid& grid, std::size_t i, std::size_t j);

// Folds crossings into per-cell path gain. Each crossing adds
// h_sq * 4 pi d^2 / (N * cell^2 * cos_incidence), the inverse of the
// expected number of crossings a uniformly launched ray leaves in the cell,
// so the sum estimates the cell-averaged |h|^2. Order of add() calls fixes
// the floating-point result.
class MapAccumulator {
public:
    MapAccumulator(const CoverageGrid& grid, std::uint64_t rays);

    void add(std::span<const PlaneCrossing> crossings);
    CoverageMap finish(MapMeta meta = {}) &&;

private:
    CoverageGrid grid_;
    double scale_;
    std::vector<double> gain_;
    std::vector<std::uint64_t> hits_;
};

CoverageMap accumulate_map(const CoverageGrid& grid, std::span<const PlaneCrossing> crossings, std::uint64_t rays);

// 10 log10(b); nullopt marks no-data (no hits or zero gain).
std::vector<std::optional<double>> to_db(const CoverageMap& map);

struct ComputeOptions {
    unsigned workers = 0;
    const std::atomic<bool>* cancel = nullptr;
    const simd::KernelTable* kernels = nullptr;
};

// Full pipeline for one transmitter over an indexed scene: trace in
// batches, accumulate in ray order. nullopt when cancelled.
std::optional<CoverageMap> compute_coverage(const Scene& scene, const AccelIndex& index, const Transmitter& tx,
                                            const CoverageGrid& grid, const TraceConfig& cfg,
                                            const ComputeOptions& options = {});

// ---- rendering ----------------------------------------------------------

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kNoDataColor{0, 0, 0};

// Known palettes: "viridis" (default), "plasma". Both run purple -> yellow.
bool is_known_palette(std::string_view name);
Rgb palette_color(std::string_view palette, double x);  // x in [0, 1]

struct Heatmap {
    std::size_t width = 0;   // n_i
    std::size_t height = 0;  // n_j
    std::vector<Rgb> pixels; // top row is the highest j (north up)
    std::string palette;
    double db_lo = kDefaultDbLow;
    double db_hi = kDefaultDbHigh;

    const Rgb& at_cell(std::size_t i, std::size_t j) const { return pixels[(height - 1 - j) * width + i]; }
};

Heatmap render_heatmap(const CoverageMap& map, std::string_view palette = "viridis", double db_lo = kDefaultDbLow,
                       double db_hi = kDefaultDbHigh);

// Binary PPM (P6), one pixel per cell.
std::string encode_ppm(const Heatmap& image);
void write_ppm(const Heatmap& image, const std::string& path);

// ---- persistence --------------------------------------------------------

// Text document tagged `# raycover-map v1`; layout in docs/map-format.md.
std::string encode_map(const CoverageMap& map);
CoverageMap decode_map(std::string_view document);  // throws ParseError
void save_map(const CoverageMap& map, const std::string& path);
CoverageMap load_map(const std::string& path);

}  // namespace raycover
