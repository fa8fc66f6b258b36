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

#include <gtest/gtest.h>

#include <random>

#include "fd_oracle.hpp"
#include "inod/layer_split.hpp"
#include "inod/noise_mask.hpp"

namespace inod {
namespace {

using testing::random_mask;

BinaryGrid seven_component_mask() {
  // Seven isolated cells on a 6x6 grid, none 4-adjacent.
  BinaryGrid g(6, 6);
  const std::pair<int, int> cells[] = {{0, 0}, {0, 2}, {0, 4}, {2, 1}, {2, 3}, {4, 0}, {4, 5}};
  for (auto [y, x] : cells) g(y, x) = 1;
  return g;
}

TEST(SplitMask, SingleLevelKeepsWholeMask) {
  Rng rng(1);
  MaskGenConfig cfg;
  const auto mask = gen_noise_mask(cfg);
  const auto set = split_mask(mask, {{56, 56}}, rng);
  ASSERT_EQ(set.levels(), 1u);
  EXPECT_EQ(set.canonical_parts[0], mask.grid);
  EXPECT_EQ(set.layer_grids[0], mask.grid);
}

TEST(SplitMask, EmptyMaskGivesEmptyParts) {
  Rng rng(2);
  const auto set = split_mask(BinaryGrid(8, 8), {{8, 8}, {4, 4}, {2, 2}}, rng);
  for (const auto& p : set.canonical_parts) EXPECT_EQ(count_ones(p), 0u);
  for (const auto& p : set.layer_grids) EXPECT_EQ(count_ones(p), 0u);
  EXPECT_TRUE(set.component_level.empty());
}

TEST(SplitMask, EmptyLevelListThrows) {
  Rng rng(3);
  EXPECT_THROW(split_mask(BinaryGrid(4, 4, 1), {}, rng), ArgumentError);
  EXPECT_THROW(split_mask(BinaryGrid(4, 4, 1), {{0, 4}}, rng), ArgumentError);
}

TEST(SplitMask, LevelAssignmentIsUniform) {
  const BinaryGrid mask = seven_component_mask();
  const std::vector<LevelDim> dims(4, LevelDim{6, 6});
  std::vector<std::array<int, 4>> hits(7, {0, 0, 0, 0});
  constexpr int kSeeds = 10000;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const auto set = split_mask(mask, dims, rng);
    ASSERT_EQ(set.component_level.size(), 7u);
    for (std::size_t k = 0; k < 7; ++k) ++hits[k][set.component_level[k]];
  }
  for (const auto& h : hits) {
    for (int count : h) {
      const double freq = static_cast<double>(count) / kSeeds;
      EXPECT_GE(freq, 0.23);
      EXPECT_LE(freq, 0.27);
    }
  }
}

TEST(SplitMask, DisabledLevelsStayEmpty) {
  Rng rng(4);
  SplitOptions opts;
  opts.enabled = {false, true, false};
  MaskGenConfig cfg;
  cfg.crop_h = cfg.crop_w = 64;
  const auto mask = gen_noise_mask(cfg);
  const auto set = split_mask(mask, {{16, 16}, {8, 8}, {4, 4}}, rng, opts);
  EXPECT_EQ(count_ones(set.canonical_parts[0]), 0u);
  EXPECT_EQ(count_ones(set.canonical_parts[2]), 0u);
  EXPECT_EQ(set.canonical_parts[1], mask.grid);
  opts.enabled = {false, false, false};
  EXPECT_THROW(split_mask(mask, {{16, 16}, {8, 8}, {4, 4}}, rng, opts), ArgumentError);
}

TEST(SplitMask, PartitionInvariantsHoldOverRandomMasks) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t h = 4 + gen() % 20, w = 4 + gen() % 20;
    const BinaryGrid mask = random_mask(h, w, gen, 0.4);
    std::vector<LevelDim> dims;
    const std::size_t levels = 1 + gen() % 4;
    for (std::size_t l = 0; l < levels; ++l) dims.push_back({1 + gen() % 30, 1 + gen() % 30});
    Rng rng(gen());
    const auto set = split_mask(mask, dims, rng);
    const auto comps = connected_components(mask);

    for (std::size_t i = 0; i < mask.size(); ++i) {
      int sum = 0;
      for (const auto& p : set.canonical_parts) sum += p.data()[i];
      ASSERT_EQ(sum, mask.data()[i]) << "conservation/disjointness broken at " << i;
      const auto id = comps.labels.data()[i];
      if (id) ASSERT_EQ(set.canonical_parts[set.component_level[id - 1]].data()[i], 1);
    }
    for (std::size_t l = 0; l < levels; ++l) {
      ASSERT_EQ(set.layer_grids[l].height(), dims[l].h);
      ASSERT_EQ(set.layer_grids[l].width(), dims[l].w);
    }
  }
}

TEST(Rasterize, EqualDimsIsIdentity) {
  std::mt19937_64 gen(6);
  const auto g = random_mask(9, 7, gen);
  EXPECT_EQ(rasterize(g, {9, 7}), g);
}

TEST(Rasterize, SingleCellCoarsenedByEightSetsOneCell) {
  for (std::size_t y = 0; y < 16; y += 5) {
    for (std::size_t x = 0; x < 16; x += 3) {
      BinaryGrid g(16, 16);
      g(y, x) = 1;
      const auto out = rasterize(g, {2, 2});
      EXPECT_EQ(count_ones(out), 1u);
      EXPECT_EQ(out(y / 8, x / 8), 1);
    }
  }
}

TEST(Rasterize, UpsamplingReplicatesBlocks) {
  std::mt19937_64 gen(7);
  const auto g = random_mask(56, 56, gen, 0.2);
  const auto out = rasterize(g, {112, 112});
  EXPECT_EQ(count_ones(out), 4 * count_ones(g));
  for (std::size_t y = 0; y < 112; ++y)
    for (std::size_t x = 0; x < 112; ++x) ASSERT_EQ(out(y, x), g(y / 2, x / 2));
}

TEST(Rasterize, CoverageKeepsEveryComponent) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t factor = std::size_t{1} << (1 + gen() % 3);
    const std::size_t coarse = 1 + gen() % 6;
    const auto part = random_mask(coarse * factor, coarse * factor, gen, 0.05);
    const auto out = rasterize(part, {coarse, coarse});
    const std::size_t ones = count_ones(part);
    ASSERT_GE(count_ones(out), (ones + factor * factor - 1) / (factor * factor));
    for (std::size_t y = 0; y < part.height(); ++y)
      for (std::size_t x = 0; x < part.width(); ++x)
        if (part(y, x)) ASSERT_EQ(out(y / factor, x / factor), 1);
  }
}

TEST(Rasterize, CentreModeSamplesInsteadOfCovering) {
  BinaryGrid g(8, 8);
  g(0, 0) = 1;  // not a centre sample of any 4x4 block
  EXPECT_EQ(count_ones(rasterize(g, {2, 2}, RasterMode::kCenter)), 0u);
  EXPECT_EQ(count_ones(rasterize(g, {2, 2}, RasterMode::kCoverage)), 1u);
}

}  // namespace
}  // namespace inod
