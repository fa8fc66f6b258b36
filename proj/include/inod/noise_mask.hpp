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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "inod/errors.hpp"
#include "inod/ops.hpp"
#include "inod/random.hpp"
#include "inod/tensor.hpp"

namespace inod {

// Side length in pixels of one mask cell. A granularity of 1/4 means a stride
// of 4: the smallest replaceable unit is a 4x4 pixel patch of the crop.
struct Granularity {
  std::size_t stride = 4;

  static bool allowed(std::size_t s) { return s == 4 || s == 8 || s == 16 || s == 32; }
};

// How placed patches are sized relative to the mask grid.
enum class ScaleMode {
  kInterval,  // each axis uniform in [ceil(dim/6), floor(2*dim/3)]
  kDiscrete,  // each axis one of {dim/6, 2*dim/3}
};

struct MaskGenConfig {
  std::size_t crop_h = 224;
  std::size_t crop_w = 224;
  Granularity granularity{};
  double target_fraction = 0.20;
  double tolerance = 0.02;
  std::uint64_t seed = 0;
  ScaleMode scale_mode = ScaleMode::kInterval;

  std::size_t grid_h() const { return crop_h / granularity.stride; }
  std::size_t grid_w() const { return crop_w / granularity.stride; }

  void validate() const {
    if (!Granularity::allowed(granularity.stride)) {
      throw ArgumentError("granularity stride must be one of 4, 8, 16, 32, got " +
                          std::to_string(granularity.stride));
    }
    if (crop_h == 0 || crop_w == 0 || crop_h % granularity.stride ||
        crop_w % granularity.stride) {
      throw ArgumentError("crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                          " is not divisible by granularity stride " +
                          std::to_string(granularity.stride));
    }
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
      throw ArgumentError("target_fraction must lie in (0, 1)");
    }
    if (!(tolerance >= 0.0) || !(target_fraction - tolerance > 0.0)) {
      throw ArgumentError("target_fraction - tolerance must be positive");
    }
  }
};

struct NoiseMask {
  BinaryGrid grid;
  Granularity granularity{};
};

inline double mask_fraction(const BinaryGrid& grid) {
  if (grid.size() == 0) return 0.0;
  return static_cast<double>(count_ones(grid)) / static_cast<double>(grid.size());
}

inline double mask_fraction(const NoiseMask& mask) { return mask_fraction(mask.grid); }

// 3x3 grid of i.i.d. Bernoulli(2/3) cells; all-zero draws are redrawn.
inline BinaryGrid gen_sample_mask(Rng& rng) {
  std::bernoulli_distribution cell(2.0 / 3.0);
  BinaryGrid g(3, 3);
  for (;;) {
    std::size_t ones = 0;
    for (auto& v : g.data()) {
      v = cell(rng) ? 1 : 0;
      ones += v;
    }
    if (ones) return g;
  }
}

namespace detail {

// Inclusive range of cell counts whose fraction lies in [target - tol, target].
inline std::pair<std::size_t, std::size_t> count_window(std::size_t total, double target,
                                                        double tol) {
  const double n = static_cast<double>(total);
  auto lo = static_cast<std::size_t>(std::ceil((target - tol) * n - 1e-9));
  auto hi = static_cast<std::size_t>(std::floor(target * n + 1e-9));
  while (hi > 0 && static_cast<double>(hi) / n > target) --hi;
  while (static_cast<double>(lo) / n < target - tol) ++lo;
  lo = std::max<std::size_t>(lo, 1);
  return {lo, hi};
}

inline std::size_t draw_extent(std::size_t dim, ScaleMode mode, Rng& rng) {
  if (mode == ScaleMode::kDiscrete) {
    const std::array<std::size_t, 2> choices{
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dim / 6.0))),
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(2.0 * dim / 3.0)))};
    return choices[std::uniform_int_distribution<int>(0, 1)(rng)];
  }
  const std::size_t lo = std::max<std::size_t>(1, (dim + 5) / 6);
  const std::size_t hi = std::max(lo, (2 * dim) / 3);
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace detail

// Builds a noise mask by OR-ing rescaled 3x3 sample masks at random offsets
// until the noise fraction reaches the window [target - tolerance, target].
// An overshooting last placement is thinned by deleting random cells it added.
inline NoiseMask gen_noise_mask(const MaskGenConfig& cfg) {
  cfg.validate();
  const std::size_t h = cfg.grid_h(), w = cfg.grid_w();
  const std::size_t total = h * w;
  const auto [lo, hi] = detail::count_window(total, cfg.target_fraction, cfg.tolerance);
  if (lo > hi) {
    throw ArgumentError("no cell count of a " + std::to_string(h) + "x" + std::to_string(w) +
                        " mask has a fraction within [" +
                        std::to_string(cfg.target_fraction - cfg.tolerance) + ", " +
                        std::to_string(cfg.target_fraction) + "]");
  }

  Rng rng(cfg.seed);
  NoiseMask mask{BinaryGrid(h, w), cfg.granularity};
  std::size_t ones = 0;
  std::vector<std::size_t> added;
  constexpr std::size_t kMaxPlacements = 1'000'000;
  for (std::size_t placement = 0; ones < lo; ++placement) {
    if (placement == kMaxPlacements) {
      throw ArgumentError("noise mask generation did not reach the target fraction");
    }
    const BinaryGrid sample = gen_sample_mask(rng);
    const std::size_t ph = detail::draw_extent(h, cfg.scale_mode, rng);
    const std::size_t pw = detail::draw_extent(w, cfg.scale_mode, rng);
    const BinaryGrid patch = nn_resize(sample, ph, pw);
    const std::size_t oy = std::uniform_int_distribution<std::size_t>(0, h - ph)(rng);
    const std::size_t ox = std::uniform_int_distribution<std::size_t>(0, w - pw)(rng);
    added.clear();
    for (std::size_t y = 0; y < ph; ++y) {
      for (std::size_t x = 0; x < pw; ++x) {
        if (!patch(y, x)) continue;
        auto& cell = mask.grid(oy + y, ox + x);
        if (!cell) {
          cell = 1;
          ++ones;
          added.push_back((oy + y) * w + ox + x);
        }
      }
    }
  }
  if (ones > hi) {
    std::shuffle(added.begin(), added.end(), rng);
    for (std::size_t i = 0; ones > hi; ++i) {
      mask.grid.data()[added[i]] = 0;
      --ones;
    }
  }
  return mask;
}

}  // namespace inod
