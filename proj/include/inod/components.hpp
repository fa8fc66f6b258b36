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
#include <cstdint>
#include <vector>

#include "inod/tensor.hpp"

namespace inod {

using LabelGrid = Grid<std::uint32_t>;

struct Components {
  LabelGrid labels;        // 0 = background, k >= 1 = component k
  std::size_t count = 0;
};

// 4-connected component labelling. Ids follow raster-scan discovery order
// starting at 1; cells touching only at a corner stay separate.
inline Components connected_components(const BinaryGrid& mask) {
  const std::size_t h = mask.height(), w = mask.width();
  Components out{LabelGrid(h, w), 0};
  std::vector<std::size_t> stack;
  for (std::size_t y0 = 0; y0 < h; ++y0) {
    for (std::size_t x0 = 0; x0 < w; ++x0) {
      if (!mask(y0, x0) || out.labels(y0, x0)) continue;
      const auto id = static_cast<std::uint32_t>(++out.count);
      out.labels(y0, x0) = id;
      stack.push_back(y0 * w + x0);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const std::size_t y = p / w, x = p % w;
        auto visit = [&](std::size_t ny, std::size_t nx) {
          if (mask(ny, nx) && !out.labels(ny, nx)) {
            out.labels(ny, nx) = id;
            stack.push_back(ny * w + nx);
          }
        };
        if (y > 0) visit(y - 1, x);
        if (y + 1 < h) visit(y + 1, x);
        if (x > 0) visit(y, x - 1);
        if (x + 1 < w) visit(y, x + 1);
      }
    }
  }
  return out;
}

}  // namespace inod
