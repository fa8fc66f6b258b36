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

// Procedural texture datasets for exercising the pretext task without real
// imagery: axis-aligned stripes and checkerboards drawn from the same colour
// distribution, so only the spatial pattern tells them apart.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "inod/data.hpp"
#include "inod/image.hpp"
#include "inod/random.hpp"

namespace inod {

enum class TextureKind { kStripes, kCheckerboard };

struct TextureParams {
  std::size_t size = 96;
  std::size_t min_period = 4;  // full period in pixels
  std::size_t max_period = 8;
  // Minimum luma difference between the two colours, so the pattern
  // survives grayscale conversion.
  float min_contrast = 0.25f;
};

inline Image make_texture(TextureKind kind, std::uint64_t seed, const TextureParams& p = {}) {
  Rng rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  float fg[3], bg[3];
  do {
    for (auto& c : fg) c = u(rng);
    for (auto& c : bg) c = u(rng);
  } while (std::abs(luma(fg[0], fg[1], fg[2]) - luma(bg[0], bg[1], bg[2])) < p.min_contrast);
  const std::size_t period =
      std::uniform_int_distribution<std::size_t>(p.min_period, p.max_period)(rng);
  const std::size_t half = std::max<std::size_t>(1, period / 2);
  const std::size_t phase_y = std::uniform_int_distribution<std::size_t>(0, period - 1)(rng);
  const std::size_t phase_x = std::uniform_int_distribution<std::size_t>(0, period - 1)(rng);
  const bool vertical = std::bernoulli_distribution(0.5)(rng);

  Image img(p.size, p.size);
  for (std::size_t y = 0; y < p.size; ++y) {
    for (std::size_t x = 0; x < p.size; ++x) {
      const bool by = ((y + phase_y) / half) % 2 == 1;
      const bool bx = ((x + phase_x) / half) % 2 == 1;
      bool on;
      if (kind == TextureKind::kStripes) {
        on = vertical ? bx : by;
      } else {
        on = bx != by;
      }
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = on ? fg[c] : bg[c];
    }
  }
  return img;
}

// Writes `count` textures as PNG files named tex_00000.png, ...
inline void write_texture_dataset(const std::filesystem::path& dir, TextureKind kind,
                                  std::size_t count, std::uint64_t seed,
                                  const TextureParams& p = {}) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "tex_%05zu.png", i);
    write_png(dir / name, make_texture(kind, derive_seed(seed, i), p));
  }
}

}  // namespace inod
