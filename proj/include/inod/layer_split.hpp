// Copyright 2026 The INoD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "inod/components.hpp"
#include "inod/errors.hpp"
#include "inod/noise_mask.hpp"
#include "inod/ops.hpp"
#include "inod/random.hpp"
#include "inod/tensor.hpp"

namespace inod {

struct LevelDim {
  std::size_t h = 0;
  std::size_t w = 0;
  friend bool operator==(const LevelDim&, const LevelDim&) = default;
};

// Transport of a canonical-resolution mask onto a coarser level grid.
enum class RasterMode {
  kCoverage,  // a coarse cell is set if any canonical cell it covers is set
  kCenter,    // nearest-neighbour centre sampling
};

// The noise mask split into one disjoint part per injection level.
struct LayerMaskSet {
  std::vector<BinaryGrid> canonical_parts;
  std::vector<BinaryGrid> layer_grids;
  std::vector<LevelDim> level_dims;
  // component_level[k - 1] is the level that component k was assigned to.
  std::vector<std::size_t> component_level;

  std::size_t levels() const { return level_dims.size(); }
};

namespace detail {

// Source index range [first, last) that output index i maps to.
inline std::pair<std::size_t, std::size_t> raster_span(std::size_t i, std::size_t in,
                                                       std::size_t out) {
  if (out >= in) {
    const std::size_t s = nearest_source_index(i, in, out);
    return {s, s + 1};
  }
  return {(i * in) / out, ((i + 1) * in + out - 1) / out};
}

}  // namespace detail

inline BinaryGrid rasterize(const BinaryGrid& part, LevelDim dim,
                            RasterMode mode = RasterMode::kCoverage) {
  if (dim.h == 0 || dim.w == 0) throw ArgumentError("rasterize to a zero level dim");
  if (dim.h == part.height() && dim.w == part.width()) return part;
  if (mode == RasterMode::kCenter || (dim.h >= part.height() && dim.w >= part.width())) {
    return nn_resize(part, dim.h, dim.w);
  }
  BinaryGrid out(dim.h, dim.w);
  for (std::size_t y = 0; y < dim.h; ++y) {
    const auto [y0, y1] = detail::raster_span(y, part.height(), dim.h);
    for (std::size_t x = 0; x < dim.w; ++x) {
      const auto [x0, x1] = detail::raster_span(x, part.width(), dim.w);
      std::uint8_t any = 0;
      for (std::size_t sy = y0; sy < y1 && !any; ++sy) {
        for (std::size_t sx = x0; sx < x1; ++sx) {
          if (part(sy, sx)) {
            any = 1;
            break;
          }
        }
      }
      out(y, x) = any;
    }
  }
  return out;
}

struct SplitOptions {
  // Levels that accept injection; empty means all. Disabled levels receive
  // empty parts.
  std::vector<bool> enabled;
  RasterMode raster = RasterMode::kCoverage;
};

// Assigns every 4-connected region of the mask to one uniformly drawn level,
// so the parts partition the mask exactly.
inline LayerMaskSet split_mask(const BinaryGrid& mask, const std::vector<LevelDim>& level_dims,
                               Rng& rng, const SplitOptions& opts = {}) {
  if (level_dims.empty()) throw ArgumentError("split_mask needs at least one level");
  for (const auto& d : level_dims) {
    if (d.h == 0 || d.w == 0) throw ArgumentError("split_mask level dims must be >= 1");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t l = 0; l < level_dims.size(); ++l) {
    if (opts.enabled.empty() || (l < opts.enabled.size() && opts.enabled[l])) {
      eligible.push_back(l);
    }
  }
  if (!opts.enabled.empty() && opts.enabled.size() != level_dims.size()) {
    throw ArgumentError("split_mask: enabled flags do not match the level count");
  }
  if (eligible.empty()) throw ArgumentError("split_mask: every injection level is disabled");

  const std::size_t levels = level_dims.size();
  LayerMaskSet out;
  out.level_dims = level_dims;
  out.canonical_parts.assign(levels, BinaryGrid(mask.height(), mask.width()));

  const Components comps = connected_components(mask);
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  out.component_level.resize(comps.count);
  for (auto& level : out.component_level) level = eligible[pick(rng)];

  const auto labels = comps.labels.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) out.canonical_parts[out.component_level[labels[i] - 1]].data()[i] = 1;
  }
  out.layer_grids.reserve(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    out.layer_grids.push_back(rasterize(out.canonical_parts[l], level_dims[l], opts.raster));
  }
  return out;
}

inline LayerMaskSet split_mask(const NoiseMask& mask, const std::vector<LevelDim>& level_dims,
                               Rng& rng, const SplitOptions& opts = {}) {
  return split_mask(mask.grid, level_dims, rng, opts);
}

// A set with every part empty; encoding with it equals plain encoding.
inline LayerMaskSet empty_layer_masks(std::size_t canonical_h, std::size_t canonical_w,
                                      const std::vector<LevelDim>& level_dims) {
  LayerMaskSet out;
  out.level_dims = level_dims;
  out.canonical_parts.assign(level_dims.size(), BinaryGrid(canonical_h, canonical_w));
  for (const auto& d : level_dims) out.layer_grids.emplace_back(d.h, d.w);
  return out;
}

}  // namespace inod
