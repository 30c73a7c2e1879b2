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

#include "raycover/coverage.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "raycover/errors.hpp"

namespace raycover {

CoverageGrid make_grid(double x0, double y0, double x1, double y1, double cell_size, double height) {
    if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1))) {
        throw ValidationError("grid extent must be finite");
    }
    if (!(x1 > x0) || !(y1 > y0)) throw ValidationError("grid extent must satisfy x1 > x0 and y1 > y0");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ValidationError("grid.cell_size must be positive");
    if (!std::isfinite(height)) throw ValidationError("grid.height must be finite");
    const double ni = std::ceil((x1 - x0) / cell_size);
    const double nj = std::ceil((y1 - y0) / cell_size);
    if (ni * nj > 1e8) throw ValidationError("grid has more than 1e8 cells");
    return {x0, y0, cell_size, static_cast<std::size_t>(ni), static_cast<std::size_t>(nj), height};
}

std::optional<CellIndex> world_to_cell(const CoverageGrid& grid, double x, double y) {
    const double fi = std::floor((x - grid.x0) / grid.cell_size);
    const double fj = std::floor((y - grid.y0) / grid.cell_size);
    if (!(fi >= 0.0 && fj >= 0.0 && fi < static_cast<double>(grid.ni) && fj < static_cast<double>(grid.nj))) {
        return std::nullopt;
    }
    return CellIndex{static_cast<std::size_t>(fi), static_cast<std::size_t>(fj)};
}

Vec3 cell_center(const CoverageGrid& grid, std::size_t i, std::size_t j) {
    if (i >= grid.ni || j >= grid.nj) {
        throw ValidationError("cell (" + std::to_string(i) + ", " + std::to_string(j) + ") outside " +
                              std::to_string(grid.ni) + "x" + std::to_string(grid.nj) + " grid");
    }
    return {grid.x0 + (static_cast<double>(i) + 0.5) * grid.cell_size,
            grid.y0 + (static_cast<double>(j) + 0.5) * grid.cell_size, grid.height};
}

MapAccumulator::MapAccumulator(const CoverageGrid& grid, std::uint64_t rays)
    : grid_(grid), gain_(grid.cell_count(), 0.0), hits_(grid.cell_count(), 0) {
    if (rays == 0) throw ValidationError("ray count must be positive");
    if (grid.ni == 0 || grid.nj == 0 || !(grid.cell_size > 0.0)) throw ValidationError("empty grid");
    scale_ = 4.0 * kPi / (static_cast<double>(rays) * grid.cell_area());
}

void MapAccumulator::add(std::span<const PlaneCrossing> crossings) {
    for (const auto& c : crossings) {
        const auto cell = world_to_cell(grid_, c.x, c.y);
        if (!cell) continue;
        const std::size_t k = grid_.flat(cell->i, cell->j);
        gain_[k] += c.h_sq * c.path_length * c.path_length * scale_ / c.cos_incidence;
        ++hits_[k];
    }
}

CoverageMap MapAccumulator::finish(MapMeta meta) && {
    return {grid_, std::move(gain_), std::move(hits_), std::move(meta)};
}

CoverageMap accumulate_map(const CoverageGrid& grid, std::span<const PlaneCrossing> crossings, std::uint64_t rays) {
    MapAccumulator acc(grid, rays);
    acc.add(crossings);
    MapMeta meta;
    meta.rays = rays;
    return std::move(acc).finish(meta);
}

std::vector<std::optional<double>> to_db(const CoverageMap& map) {
    std::vector<std::optional<double>> out(map.gain.size());
    for (std::size_t k = 0; k < map.gain.size(); ++k) {
        if (map.hits[k] > 0 && map.gain[k] > 0.0) out[k] = 10.0 * std::log10(map.gain[k]);
    }
    return out;
}

std::optional<CoverageMap> compute_coverage(const Scene& scene, const AccelIndex& index, const Transmitter& tx,
                                            const CoverageGrid& grid, const TraceConfig& cfg,
                                            const ComputeOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    MapAccumulator acc(grid, cfg.rays);
    TraceOptions trace_opts{options.workers, options.cancel, options.kernels};
    const bool finished = trace_coverage_batches(
        index, scene, tx, grid.height, cfg, [&](std::span<const PlaneCrossing> batch) { acc.add(batch); },
        trace_opts);
    if (!finished) return std::nullopt;

    MapMeta meta{cfg.seed, cfg.rays, cfg.max_depth, cfg.min_amplitude, tx, 0.0};
    meta.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(acc).finish(meta);
}

// ---- rendering ----------------------------------------------------------

namespace {

constexpr Rgb kViridis[] = {{0x44, 0x01, 0x54}, {0x47, 0x2c, 0x7a}, {0x3b, 0x51, 0x8b},
                            {0x2c, 0x71, 0x8e}, {0x21, 0x90, 0x8d}, {0x27, 0xad, 0x81},
                            {0x5c, 0xc8, 0x63}, {0xaa, 0xdc, 0x32}, {0xfd, 0xe7, 0x25}};
constexpr Rgb kPlasma[] = {{0x0d, 0x08, 0x87}, {0x53, 0x02, 0xa3}, {0x8b, 0x0a, 0xa5}, {0xb8, 0x32, 0x89},
                           {0xdb, 0x5c, 0x68}, {0xf4, 0x88, 0x49}, {0xfe, 0xbd, 0x2a}, {0xf0, 0xf9, 0x21}};

std::span<const Rgb> stops_for(std::string_view palette) {
    if (palette == "viridis") return kViridis;
    if (palette == "plasma") return kPlasma;
    throw ValidationError("unknown palette '" + std::string(palette) + "'");
}

}  // namespace

bool is_known_palette(std::string_view name) { return name == "viridis" || name == "plasma"; }

Rgb palette_color(std::string_view palette, double x) {
    const auto stops = stops_for(palette);
    x = std::clamp(x, 0.0, 1.0);
    const double pos = x * static_cast<double>(stops.size() - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
    const double f = pos - static_cast<double>(k);
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        const double a = stops[k][c];
        const double b = stops[k + 1][c];
        out[c] = static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
    }
    return out;
}

Heatmap render_heatmap(const CoverageMap& map, std::string_view palette, double db_lo, double db_hi) {
    if (!(db_lo < db_hi)) throw ValidationError("dB range must satisfy lo < hi");
    stops_for(palette);
    const auto db = to_db(map);
    Heatmap img;
    img.width = map.grid.ni;
    img.height = map.grid.nj;
    img.palette = std::string(palette);
    img.db_lo = db_lo;
    img.db_hi = db_hi;
    img.pixels.resize(map.grid.cell_count(), kNoDataColor);
    for (std::size_t j = 0; j < map.grid.nj; ++j) {
        for (std::size_t i = 0; i < map.grid.ni; ++i) {
            const auto& v = db[map.grid.flat(i, j)];
            if (!v) continue;
            const double x = (std::clamp(*v, db_lo, db_hi) - db_lo) / (db_hi - db_lo);
            img.pixels[(img.height - 1 - j) * img.width + i] = palette_color(palette, x);
        }
    }
    return img;
}

std::string encode_ppm(const Heatmap& image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.reserve(out.size() + image.pixels.size() * 3);
    for (const auto& p : image.pixels) out.append(reinterpret_cast<const char*>(p.data()), 3);
    return out;
}

void write_ppm(const Heatmap& image, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    const std::string data = encode_ppm(image);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
}

// ---- persistence --------------------------------------------------------

namespace {

constexpr std::string_view kMapTag = "# raycover-map v1";

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* antenna_name(AntennaKind k) { return k == AntennaKind::isotropic ? "isotropic" : "directional"; }

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next() {
        if (pos_ > text_.size()) fail("unexpected end of document");
        const auto nl = text_.find('\n', pos_);
        std::string_view line;
        if (nl == std::string_view::npos) {
            line = text_.substr(pos_);
            pos_ = text_.size() + 1;
        } else {
            line = text_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
        }
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    }

    std::vector<std::string_view> fields(std::string_view expected_key, std::size_t count) {
        const auto line = next();
        std::vector<std::string_view> toks;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && line[i] == ' ') ++i;
            const std::size_t s = i;
            while (i < line.size() && line[i] != ' ') ++i;
            if (i > s) toks.push_back(line.substr(s, i - s));
        }
        if (!expected_key.empty()) {
            if (toks.empty() || toks[0] != expected_key) fail("expected '" + std::string(expected_key) + "' record");
            toks.erase(toks.begin());
        }
        if (toks.size() != count) fail("expected " + std::to_string(count) + " fields");
        return toks;
    }

    void expect(std::string_view literal) {
        if (next() != literal) fail("expected '" + std::string(literal) + "'");
    }

    double real(std::string_view tok) {
        char* end = nullptr;
        const std::string s(tok);
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) fail("bad number '" + s + "'");
        return v;
    }

    std::uint64_t count(std::string_view tok) {
        char* end = nullptr;
        const std::string s(tok);
        if (s.empty() || s[0] == '-') fail("bad count '" + s + "'");
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (end != s.c_str() + s.size()) fail("bad count '" + s + "'");
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("map line " + std::to_string(line_no_) + ": " + what, line_no_);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

}  // namespace

std::string encode_map(const CoverageMap& map) {
    const auto& g = map.grid;
    const auto& m = map.meta;
    std::string out;
    out.reserve(g.cell_count() * 32 + 256);
    out += std::string(kMapTag) + "\n";
    out += "grid " + fmt_double(g.x0) + " " + fmt_double(g.y0) + " " + fmt_double(g.cell_size) + " " +
           std::to_string(g.ni) + " " + std::to_string(g.nj) + " " + fmt_double(g.height) + "\n";
    out += "trace " + std::to_string(m.rays) + " " + std::to_string(m.max_depth) + " " + fmt_double(m.min_amplitude) +
           " " + std::to_string(m.seed) + "\n";
    out += "tx " + fmt_double(m.tx.position.x) + " " + fmt_double(m.tx.position.y) + " " +
           fmt_double(m.tx.position.z) + " " + fmt_double(m.tx.frequency_hz) + " " + antenna_name(m.tx.antenna.kind) +
           " " + fmt_double(m.tx.antenna.exponent) + " " + fmt_double(m.tx.boresight.x) + " " +
           fmt_double(m.tx.boresight.y) + " " + fmt_double(m.tx.boresight.z) + "\n";
    out += "gain\n";
    for (std::size_t j = 0; j < g.nj; ++j) {
        for (std::size_t i = 0; i < g.ni; ++i) {
            if (i) out += ' ';
            out += fmt_double(map.gain[g.flat(i, j)]);
        }
        out += '\n';
    }
    out += "hits\n";
    for (std::size_t j = 0; j < g.nj; ++j) {
        for (std::size_t i = 0; i < g.ni; ++i) {
            if (i) out += ' ';
            out += std::to_string(map.hits[g.flat(i, j)]);
        }
        out += '\n';
    }
    out += "end\n";
    return out;
}

CoverageMap decode_map(std::string_view document) {
    LineReader in(document);
    if (in.next() != kMapTag) in.fail("missing '# raycover-map v1' header");

    CoverageMap map;
    auto& g = map.grid;
    {
        const auto f = in.fields("grid", 6);
        g.x0 = in.real(f[0]);
        g.y0 = in.real(f[1]);
        g.cell_size = in.real(f[2]);
        g.ni = in.count(f[3]);
        g.nj = in.count(f[4]);
        g.height = in.real(f[5]);
        if (!(g.cell_size > 0.0) || g.ni == 0 || g.nj == 0 || g.ni * g.nj > 100'000'000) in.fail("invalid grid");
    }
    {
        const auto f = in.fields("trace", 4);
        map.meta.rays = in.count(f[0]);
        map.meta.max_depth = static_cast<int>(in.count(f[1]));
        map.meta.min_amplitude = in.real(f[2]);
        map.meta.seed = in.count(f[3]);
    }
    {
        const auto f = in.fields("tx", 9);
        auto& tx = map.meta.tx;
        tx.position = {in.real(f[0]), in.real(f[1]), in.real(f[2])};
        tx.frequency_hz = in.real(f[3]);
        if (f[4] == "isotropic") {
            tx.antenna.kind = AntennaKind::isotropic;
        } else if (f[4] == "directional") {
            tx.antenna.kind = AntennaKind::directional;
        } else {
            in.fail("unknown antenna kind");
        }
        tx.antenna.exponent = in.real(f[5]);
        tx.boresight = {in.real(f[6]), in.real(f[7]), in.real(f[8])};
    }

    map.gain.resize(g.cell_count());
    map.hits.resize(g.cell_count());
    in.expect("gain");
    for (std::size_t j = 0; j < g.nj; ++j) {
        const auto f = in.fields({}, g.ni);
        for (std::size_t i = 0; i < g.ni; ++i) {
            const double v = in.real(f[i]);
            if (!(v >= 0.0)) in.fail("negative gain");
            map.gain[g.flat(i, j)] = v;
        }
    }
    in.expect("hits");
    for (std::size_t j = 0; j < g.nj; ++j) {
        const auto f = in.fields({}, g.ni);
        for (std::size_t i = 0; i < g.ni; ++i) {
            const std::size_t k = g.flat(i, j);
            map.hits[k] = in.count(f[i]);
            if (map.hits[k] == 0 && map.gain[k] != 0.0) in.fail("gain without hits");
        }
    }
    in.expect("end");
    return map;
}

void save_map(const CoverageMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    const std::string doc = encode_map(map);
    f.write(doc.data(), static_cast<std::streamsize>(doc.size()));
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
}

CoverageMap load_map(const std::string& path) { return decode_map(read_text_file(path)); }

}  // namespace raycover
