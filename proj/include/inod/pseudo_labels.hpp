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
#include <cstddef>
#include <cstdint>
#include <vector>

#include "inod/components.hpp"
#include "inod/errors.hpp"
#include "inod/noise_mask.hpp"
#include "inod/ops.hpp"
#include "inod/tensor.hpp"

namespace inod {

// Axis-aligned box in mask-cell coordinates; x0/y0 inclusive, x1/y1
// exclusive. Every box carries the single class "noise".
struct BoxLabel {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::size_t width() const { return x1 - x0; }
  std::size_t height() const { return y1 - y0; }
  bool contains(std::size_t y, std::size_t x) const {
    return y >= y0 && y < y1 && x >= x0 && x < x1;
  }
  friend bool operator==(const BoxLabel&, const BoxLabel&) = default;
};

struct InstanceLabel {
  LabelGrid ids;                // 0 = background
  std::vector<BoxLabel> boxes;  // boxes[k - 1] belongs to instance k
};

enum class InstanceRule {
  kComponent,    // instance id = connected-component id
  kBoxInterior,  // every set cell inside box k gets id k; later boxes win
};

// Tight boxes of labelled components, ordered by component id.
inline std::vector<BoxLabel> boxes_from_components(const Components& comps) {
  std::vector<BoxLabel> boxes(comps.count);
  std::vector<bool> seen(comps.count, false);
  const auto& labels = comps.labels;
  for (std::size_t y = 0; y < labels.height(); ++y) {
    for (std::size_t x = 0; x < labels.width(); ++x) {
      const auto id = labels(y, x);
      if (!id) continue;
      auto& b = boxes[id - 1];
      if (!seen[id - 1]) {
        b = {x, y, x + 1, y + 1};
        seen[id - 1] = true;
      } else {
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x + 1);
        b.y1 = std::max(b.y1, y + 1);
      }
    }
  }
  return boxes;
}

inline std::vector<BoxLabel> boxes_from_mask(const BinaryGrid& mask) {
  return boxes_from_components(connected_components(mask));
}

inline std::vector<BoxLabel> boxes_from_mask(const NoiseMask& mask) {
  return boxes_from_mask(mask.grid);
}

// Nearest-neighbour resize of the mask to the supervision resolution.
inline BinaryGrid semantic_from_mask(const BinaryGrid& mask, std::size_t out_h,
                                     std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw ArgumentError("semantic label dims must be positive");
  return nn_resize(mask, out_h, out_w);
}

inline BinaryGrid semantic_from_mask(const NoiseMask& mask, std::size_t out_h,
                                     std::size_t out_w) {
  return semantic_from_mask(mask.grid, out_h, out_w);
}

inline InstanceLabel instances_from_mask(const BinaryGrid& mask,
                                         InstanceRule rule = InstanceRule::kComponent) {
  Components comps = connected_components(mask);
  InstanceLabel out{LabelGrid(mask.height(), mask.width()), boxes_from_components(comps)};
  if (rule == InstanceRule::kComponent) {
    out.ids = std::move(comps.labels);
    return out;
  }
  for (std::size_t k = 0; k < out.boxes.size(); ++k) {
    const auto& b = out.boxes[k];
    for (std::size_t y = b.y0; y < b.y1; ++y) {
      for (std::size_t x = b.x0; x < b.x1; ++x) {
        if (mask(y, x)) out.ids(y, x) = static_cast<std::uint32_t>(k + 1);
      }
    }
  }
  return out;
}

inline InstanceLabel instances_from_mask(const NoiseMask& mask,
                                         InstanceRule rule = InstanceRule::kComponent) {
  return instances_from_mask(mask.grid, rule);
}

// Scales cell-coordinate boxes to pixel coordinates of the crop.
inline std::vector<BoxLabel> to_pixel_boxes(const std::vector<BoxLabel>& boxes,
                                            std::size_t stride) {
  std::vector<BoxLabel> out = boxes;
  for (auto& b : out) {
    b.x0 *= stride;
    b.y0 *= stride;
    b.x1 *= stride;
    b.y1 *= stride;
  }
  return out;
}

}  // namespace inod
