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

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "inod/components.hpp"
#include "inod/encoder.hpp"
#include "inod/focal_loss.hpp"
#include "inod/image.hpp"
#include "inod/layer_split.hpp"
#include "inod/noise_mask.hpp"
#include "inod/ops.hpp"
#include "inod/pseudo_labels.hpp"
#include "inod/synthetic.hpp"
#include "inod/train.hpp"

namespace inod {
namespace {

namespace fs = std::filesystem;
using testing::numeric_gradient;
using testing::random_mask;
using testing::random_tensor;
using testing::relative_error;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---- 1. mask conservation -------------------------------------------------

Outcome mask_conservation() {
  Outcome o;
  std::mt19937_64 rng(101);
  const std::size_t strides[] = {4, 8, 16, 32};
  std::size_t done = 0, redraws = 0;
  while (done < 1000) {
    MaskGenConfig cfg;
    cfg.granularity.stride = strides[rng() % 4];
    cfg.crop_h = cfg.granularity.stride * (4 + rng() % 61);
    cfg.crop_w = cfg.granularity.stride * (4 + rng() % 61);
    cfg.target_fraction = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    cfg.tolerance = 0.02;
    cfg.seed = rng();
    cfg.scale_mode = rng() % 4 == 0 ? ScaleMode::kDiscrete : ScaleMode::kInterval;
    NoiseMask mask;
    try {
      mask = gen_noise_mask(cfg);
    } catch (const ArgumentError&) {
      ++redraws;  // grid too small for the requested window
      continue;
    }
    const std::size_t levels = 1 + rng() % 4;
    std::vector<LevelDim> dims;
    SplitOptions opts;
    opts.raster = rng() % 2 ? RasterMode::kCoverage : RasterMode::kCenter;
    for (std::size_t l = 0; l < levels; ++l) {
      dims.push_back({std::max<std::size_t>(1, mask.grid.height() >> l),
                      std::max<std::size_t>(1, mask.grid.width() >> l)});
      opts.enabled.push_back(rng() % 3 != 0);
    }
    opts.enabled[rng() % levels] = true;
    Rng split_rng(rng());
    const auto set = split_mask(mask, dims, split_rng, opts);
    const BinaryGrid& n = mask.grid;
    for (std::size_t i = 0; i < n.size(); ++i) {
      unsigned total = 0;
      for (std::size_t l = 0; l < levels; ++l) total += set.canonical_parts[l].data()[i];
      if (total != n.data()[i]) {
        o.fail("draw " + std::to_string(done) + ": cell " + std::to_string(i) + " covered " +
               std::to_string(total) + " times");
      }
    }
    for (std::size_t l = 0; l < levels; ++l) {
      if (!opts.enabled[l] && count_ones(set.canonical_parts[l]) != 0) {
        o.fail("draw " + std::to_string(done) + ": disabled level " + std::to_string(l) + " received cells");
      }
    }
    ++done;
  }
  if (o.pass) o.detail = "1000 draws exact, parts disjoint (" + std::to_string(redraws) + " infeasible configs redrawn)";
  return o;
}

// ---- 2. quantity control ----------------------------------------------------

Outcome quantity_control() {
  Outcome o;
  double worst_low = 1.0, worst_high = -1.0;
  for (double target : {0.10, 0.20, 0.30, 0.40}) {
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
      MaskGenConfig cfg;
      cfg.target_fraction = target;
      cfg.tolerance = 0.02;
      cfg.seed = seed;
      const double f = mask_fraction(gen_noise_mask(cfg));
      worst_low = std::min(worst_low, f - (target - 0.02));
      worst_high = std::max(worst_high, f - target);
      if (f < target - 0.02 - 1e-12 || f > target + 1e-12) {
        o.fail("target " + fmt("%.2f", target) + " seed " + std::to_string(seed) + ": fraction " +
               fmt("%.6f", f));
      }
    }
  }
  if (o.pass) {
    o.detail = "1000 masks in window; min margin below " + fmt("%.5f", worst_low) +
               ", max excess " + fmt("%.5f", worst_high);
  }
  return o;
}

// ---- 3. injection exactness -------------------------------------------------

Network<double> randomized_network(const EncoderConfig& cfg, std::mt19937_64& rng) {
  Network<double> net(cfg);
  for (auto& p : net.parameters())
    for (auto& v : p.value.data()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  return net;
}

Outcome injection_exactness() {
  Outcome o;
  std::mt19937_64 rng(303);
  EncoderConfig cfg;  // default four-level ladder
  const std::size_t crop = 64;
  for (int ep = 0; ep < 500; ++ep) {
    cfg.seed = rng();
    for (auto& l : cfg.levels) l.inject = ep % 2 == 0 || rng() % 2 == 0;
    cfg.levels[rng() % cfg.levels.size()].inject = true;
    const auto net = randomized_network(cfg, rng);
    const auto src = random_tensor({3, crop, crop}, rng);
    const auto noise_img = random_tensor({3, crop, crop}, rng);
    MaskGenConfig mcfg;
    mcfg.crop_h = mcfg.crop_w = crop;
    mcfg.granularity.stride = rng() % 2 ? 4 : 8;
    mcfg.target_fraction = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
    mcfg.seed = rng();
    const NoiseMask mask = gen_noise_mask(mcfg);
    SplitOptions opts;
    opts.enabled = cfg.injection_sites();
    Rng split_rng(rng());
    const auto set = split_mask(mask, cfg.level_dims(crop, crop), split_rng, opts);

    const auto plain = encode_plain(src, net);
    const auto noise = encode_plain(noise_img, net);
    const auto comp = encode_with_injection(src, noise, set, net);

    // Recompute the pre-injection source map of every level from the
    // previous composite with the raw conv kernel, then compare cellwise.
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
      Tensor<double> source_l = plain.levels[0];
      if (l > 0) {
        const std::size_t wi = net.level_index(l);
        source_l = conv2d_forward(comp.levels[l - 1], net.parameters()[wi].value,
                                  net.parameters()[wi + 1].value,
                                  {cfg.levels[l].stride, cfg.levels[l].padding()});
        for (auto& v : source_l.data()) v = v > 0.0 ? v : 0.0;
      }
      const auto& c = comp.levels[l];
      const auto& m = set.layer_grids[l];
      const std::size_t ch = c.dim(0), h = c.dim(1), w = c.dim(2);
      for (std::size_t k = 0; k < ch; ++k)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double expect = m(y, x) ? noise.levels[l].at(k, y, x) : source_l.at(k, y, x);
            if (c.at(k, y, x) != expect) {
              o.fail("episode " + std::to_string(ep) + " level " + std::to_string(l) +
                     ": composite differs from the " + (m(y, x) ? "noise" : "source") + " map");
            }
          }
    }
    const auto empty = empty_layer_masks(mask.grid.height(), mask.grid.width(), cfg.level_dims(crop, crop));
    const auto same = encode_with_injection(src, noise, empty, net);
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
      if (!(same.levels[l] == plain.levels[l])) {
        o.fail("episode " + std::to_string(ep) + ": empty-mask encoding differs at level " + std::to_string(l));
      }
    }
  }
  if (o.pass) o.detail = "500 episodes bit-exact at every injection point; empty masks reproduce plain encoding";
  return o;
}

// ---- 4. pseudo-label oracle equivalence -------------------------------------

LabelGrid flood_fill(const BinaryGrid& m, std::size_t& count) {
  LabelGrid out(m.height(), m.width());
  count = 0;
  const int H = static_cast<int>(m.height()), W = static_cast<int>(m.width());
  std::function<void(int, int, std::uint32_t)> fill = [&](int y, int x, std::uint32_t id) {
    if (y < 0 || x < 0 || y >= H || x >= W || !m(y, x) || out(y, x)) return;
    out(y, x) = id;
    fill(y + 1, x, id);
    fill(y - 1, x, id);
    fill(y, x + 1, id);
    fill(y, x - 1, id);
  };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (m(y, x) && !out(y, x)) fill(y, x, static_cast<std::uint32_t>(++count));
  return out;
}

Outcome pseudo_labels() {
  Outcome o;
  for (std::uint32_t bits = 0; bits < (1u << 16); ++bits) {
    BinaryGrid m(4, 4);
    for (std::size_t i = 0; i < 16; ++i) m.data()[i] = (bits >> i) & 1u;
    std::size_t count = 0;
    const auto oracle = flood_fill(m, count);
    const auto got = connected_components(m);
    if (got.count != count || !(got.labels == oracle)) o.fail("4x4 mask " + std::to_string(bits));
  }
  std::mt19937_64 rng(404);
  std::size_t boxes_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double p = std::uniform_real_distribution<double>(0.05, 0.7)(rng);
    const BinaryGrid m = random_mask(56, 56, rng, p);
    std::size_t count = 0;
    const auto oracle = flood_fill(m, count);
    const auto comps = connected_components(m);
    if (comps.count != count || !(comps.labels == oracle)) o.fail("56x56 labeling, trial " + std::to_string(trial));
    const auto boxes = boxes_from_mask(m);
    if (boxes.size() != count) o.fail("box count, trial " + std::to_string(trial));
    for (std::size_t k = 0; k < boxes.size() && k < count; ++k) {
      const auto& b = boxes[k];
      const auto id = static_cast<std::uint32_t>(k + 1);
      bool top = false, bottom = false, left = false, right = false, outside = false;
      for (std::size_t y = 0; y < 56; ++y)
        for (std::size_t x = 0; x < 56; ++x) {
          if (oracle(y, x) != id) continue;
          if (!b.contains(y, x)) outside = true;
          top |= y == b.y0;
          bottom |= y + 1 == b.y1;
          left |= x == b.x0;
          right |= x + 1 == b.x1;
        }
      if (outside || !(top && bottom && left && right)) o.fail("box not tight, trial " + std::to_string(trial));
      ++boxes_checked;
    }
    // Diagonal-only contacts stay separate.
    for (std::size_t y = 0; y + 1 < 56; ++y)
      for (std::size_t x = 0; x + 1 < 56; ++x) {
        if (m(y, x) && m(y + 1, x + 1) && !m(y + 1, x) && !m(y, x + 1) &&
            comps.labels(y, x) == comps.labels(y + 1, x + 1) && oracle(y, x) != oracle(y + 1, x + 1)) {
          o.fail("corner contact merged, trial " + std::to_string(trial));
        }
      }
  }
  // Checkerboard: every cell touches others only at corners.
  BinaryGrid cb(56, 56);
  for (std::size_t y = 0; y < 56; ++y)
    for (std::size_t x = 0; x < 56; ++x) cb(y, x) = (x + y) % 2 == 0;
  if (connected_components(cb).count != count_ones(cb)) o.fail("checkerboard cells merged");
  if (o.pass) {
    o.detail = "65536 4x4 masks match flood fill; " + std::to_string(boxes_checked) +
               " boxes tight on 1000 56x56 masks; corner contacts never merge";
  }
  return o;
}

// ---- 5. gradient correctness -----------------------------------------------

struct GradStats {
  double worst = 0.0;
  void note(Outcome& o, const std::string& what, double err) {
    worst = std::max(worst, err);
    if (!(err < 1e-4)) o.fail(what + ": relative error " + fmt("%.3g", err));
  }
};

Outcome gradients() {
  Outcome o;
  std::mt19937_64 rng(505);
  GradStats conv, merge, neck_s, focal, full;

  for (int t = 0; t < 100; ++t) {
    const std::size_t cin = 1 + rng() % 3, cout = 1 + rng() % 3, k = rng() % 2 ? 3 : 1;
    const std::size_t h = 3 + rng() % 5, w = 3 + rng() % 5, stride = 1 + rng() % 2, pad = k / 2;
    const auto x = random_tensor({cin, h, w}, rng);
    const auto wt = random_tensor({cout, cin, k, k}, rng);
    const auto b = random_tensor({cout}, rng);
    const auto probe = random_tensor({cout, (h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1}, rng);
    auto loss = [&](const Tensor<double>& xx, const Tensor<double>& ww, const Tensor<double>& bb) {
      const auto y = conv2d_forward(xx, ww, bb, {stride, pad});
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
      return s;
    };
    Tape<double> tape;
    auto vx = tape.leaf(x, true), vw = tape.leaf(wt, true), vb = tape.leaf(b, true);
    const auto g = tape.backward(ad::sum(ad::mul(ad::conv2d(vx, vw, vb, stride, pad), tape.leaf(probe))));
    const std::string tag = "conv2d trial " + std::to_string(t);
    conv.note(o, tag + " dx", relative_error(g[vx], numeric_gradient([&](const Tensor<double>& z) { return loss(z, wt, b); }, x)));
    conv.note(o, tag + " dw", relative_error(g[vw], numeric_gradient([&](const Tensor<double>& z) { return loss(x, z, b); }, wt)));
    conv.note(o, tag + " db", relative_error(g[vb], numeric_gradient([&](const Tensor<double>& z) { return loss(x, wt, z); }, b)));
  }

  for (int t = 0; t < 100; ++t) {
    const std::size_t c = 1 + rng() % 4, h = 2 + rng() % 6, w = 2 + rng() % 6;
    const auto a = random_tensor({c, h, w}, rng), b = random_tensor({c, h, w}, rng);
    const auto probe = random_tensor({c, h, w}, rng);
    const auto m = random_mask(h, w, rng, 0.4);
    auto loss = [&](const Tensor<double>& aa, const Tensor<double>& bb) {
      const auto y = masked_merge(aa, bb, m);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i] * y[i];
      return s;
    };
    Tape<double> tape;
    auto va = tape.leaf(a, true), vb = tape.leaf(b, true);
    const auto y = ad::masked_merge(va, vb, m);
    const auto g = tape.backward(ad::sum(ad::mul(ad::mul(y, tape.leaf(probe)), y)));
    const std::string tag = "masked_merge trial " + std::to_string(t);
    merge.note(o, tag + " da", relative_error(g[va], numeric_gradient([&](const Tensor<double>& z) { return loss(z, b); }, a)));
    merge.note(o, tag + " db", relative_error(g[vb], numeric_gradient([&](const Tensor<double>& z) { return loss(a, z); }, b)));
  }

  EncoderConfig tiny;
  tiny.stem = {{3, 3, 2, false}};
  tiny.levels = {{3, 3, 2}, {4, 3, 2}, {4, 3, 1}};
  tiny.neck_channels = 3;
  for (int t = 0; t < 100; ++t) {
    const auto net = randomized_network(tiny, rng);
    FeaturePyramid<double> pyr{{}, tiny.level_strides(), tiny.fingerprint()};
    for (const auto& d : tiny.level_dims(16, 16)) {
      pyr.levels.push_back(random_tensor({tiny.levels[pyr.levels.size()].out_channels, d.h, d.w}, rng));
    }
    const LevelDim out{4 + rng() % 5, 4 + rng() % 5};
    const auto probe = random_tensor({tiny.neck_channels, out.h, out.w}, rng);
    auto loss = [&](const FeaturePyramid<double>& p, const Network<double>& n) {
      const auto y = neck(p, n, out);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
      return s;
    };
    Tape<double> tape;
    BoundNetwork<double> bound(tape, net, true);
    const auto leaves = [&] {
      VarPyramid<double> v{{}, pyr.strides, pyr.fingerprint};
      for (const auto& l : pyr.levels) v.levels.push_back(tape.leaf(l, true));
      return v;
    }();
    const auto g = tape.backward(ad::sum(ad::mul(neck(bound, leaves, out), tape.leaf(probe))));
    const std::string tag = "neck trial " + std::to_string(t);
    for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
      neck_s.note(o, tag + " level " + std::to_string(l),
                  relative_error(g[leaves.levels[l]], numeric_gradient([&](const Tensor<double>& z) {
                                   auto p = pyr;
                                   p.levels[l] = z;
                                   return loss(p, net);
                                 }, pyr.levels[l])));
    }
    for (std::size_t l = 0; l < tiny.levels.size(); ++l) {
      for (std::size_t j : {net.neck_index(l), net.neck_index(l) + 1}) {
        neck_s.note(o, tag + " " + net.parameters()[j].name,
                    relative_error(g[bound.var(j)], numeric_gradient([&](const Tensor<double>& z) {
                                     auto n = net;
                                     n.parameters()[j].value = z;
                                     return loss(pyr, n);
                                   }, net.parameters()[j].value)));
      }
    }
  }

  for (int t = 0; t < 100; ++t) {
    const auto x = random_tensor({8, 8}, rng, -4.0, 4.0);
    const auto target = random_mask(8, 8, rng, std::uniform_real_distribution<double>(0.1, 0.9)(rng));
    const FocalLossParams p{std::uniform_real_distribution<double>(0.1, 0.9)(rng),
                            std::uniform_real_distribution<double>(0.0, 3.0)(rng)};
    Tape<double> tape;
    auto v = tape.leaf(x, true);
    const auto g = tape.backward(focal_loss(v, target, p));
    focal.note(o, "focal trial " + std::to_string(t),
               relative_error(g[v], numeric_gradient([&](const Tensor<double>& z) { return focal_loss_value(z, target, p); }, x)));
  }

  EncoderConfig fcfg;
  fcfg.stem = {{3, 3, 2, false}};
  fcfg.levels = {{3, 3, 2}, {3, 3, 2}, {3, 3, 1}};
  fcfg.neck_channels = 3;
  for (int t = 0; t < 100; ++t) {
    const auto net = randomized_network(fcfg, rng);
    const auto src = random_tensor({3, 16, 16}, rng), noise = random_tensor({3, 16, 16}, rng);
    MaskGenConfig mcfg;
    mcfg.crop_h = mcfg.crop_w = 16;
    mcfg.target_fraction = 0.3;
    mcfg.tolerance = 0.1;
    mcfg.seed = rng();
    const NoiseMask mask = gen_noise_mask(mcfg);
    Rng split_rng(rng());
    const auto set = split_mask(mask, fcfg.level_dims(16, 16), split_rng);
    const LevelDim out{4, 4};
    auto forward = [&](const Network<double>& n, Tape<double>& tape, const Var<double>& s, const Var<double>& z) {
      BoundNetwork<double> bound(tape, n, true);
      const auto comp = encode_with_injection(bound, s, encode_plain(bound, z), set);
      return std::make_pair(focal_loss(head(bound, neck(bound, comp, out)), mask.grid), bound);
    };
    auto value = [&](const Network<double>& n, const Tensor<double>& s, const Tensor<double>& z) {
      Tape<double> tape;
      return forward(n, tape, tape.leaf(s), tape.leaf(z)).first.value().item();
    };
    Tape<double> tape;
    auto vs = tape.leaf(src, true), vn = tape.leaf(noise, true);
    auto [loss, bound] = forward(net, tape, vs, vn);
    const auto g = tape.backward(loss);
    const std::string tag = "injected graph trial " + std::to_string(t);
    full.note(o, tag + " source", relative_error(g[vs], numeric_gradient([&](const Tensor<double>& z) { return value(net, z, noise); }, src)));
    full.note(o, tag + " noise", relative_error(g[vn], numeric_gradient([&](const Tensor<double>& z) { return value(net, src, z); }, noise)));
    for (std::size_t i = 0; i < net.parameters().size(); ++i) {
      full.note(o, tag + " " + net.parameters()[i].name,
                relative_error(g[bound.var(i)], numeric_gradient([&](const Tensor<double>& z) {
                                 auto n = net;
                                 n.parameters()[i].value = z;
                                 return value(n, src, noise);
                               }, net.parameters()[i].value)));
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "worst relative error: conv2d %.2e, masked_merge %.2e, neck %.2e, focal %.2e, injected graph %.2e",
                conv.worst, merge.worst, neck_s.worst, focal.worst, full.worst);
  if (o.pass) o.detail = buf;
  else o.detail += "; " + std::string(buf);
  return o;
}

// ---- 6. schedule fidelity ----------------------------------------------------

Outcome schedule() {
  Outcome o;
  for (std::size_t epochs : {10u, 100u, 200u}) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    const std::size_t m1 = epochs * 6 / 10, m2 = epochs * 8 / 10;
    const std::pair<std::size_t, double> checks[] = {
        {0, 0.02}, {m1 - 1, 0.02}, {m1, 0.002}, {m2 - 1, 0.002}, {m2, 0.0002}, {epochs - 1, 0.0002}};
    for (const auto& [e, want] : checks) {
      const double got = lr_at_epoch(cfg, e);
      if (got != want) {
        o.fail(std::to_string(epochs) + " epochs, epoch " + std::to_string(e) + ": " + fmt("%.17g", got));
      }
    }
  }
  if (o.pass) o.detail = "0.02 -> 0.002 -> 0.0002 exact at 60%/80% for 10, 100, 200 epochs";
  return o;
}

// ---- 7. learnability ---------------------------------------------------------

// Toy encoder: one injection level at stride 4 followed by a non-injecting
// 1x1 refinement at the same resolution.
PretextConfig toy_config() {
  PretextConfig cfg;
  cfg.train.crop = 64;
  cfg.train.epochs = 10;
  cfg.train.steps_per_epoch = 50;  // 500 steps
  cfg.train.batch_size = 8;
  cfg.train.base_lr = 0.1;
  cfg.train.seed = 7;
  cfg.mask.granularity.stride = 4;
  cfg.mask.target_fraction = 0.20;
  cfg.mask.tolerance = 0.02;
  cfg.encoder.stem = {{16, 3, 2, false}};
  cfg.encoder.levels = {{32, 3, 2, true}, {32, 1, 1, false}};
  cfg.encoder.neck_channels = 32;
  cfg.augment.blur_prob = 0.0;  // blur wipes out period-4 textures
  return cfg;
}

std::vector<Image> textures(TextureKind kind, std::uint64_t seed, std::size_t n) {
  TextureParams tp;
  tp.size = 96;
  tp.min_period = 4;
  tp.max_period = 6;
  std::vector<Image> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_texture(kind, derive_seed(seed, i), tp));
  return out;
}

Outcome learnability() {
  Outcome o;
  PretextConfig cfg = toy_config();
  PretextData train;
  train.source = textures(TextureKind::kStripes, 1, 64);
  train.noise = textures(TextureKind::kCheckerboard, 2, 64);
  train.stats = compute_stats(train.source);
  // Held-out episodes are drawn from textures never seen in training.
  PretextData held;
  held.source = textures(TextureKind::kStripes, 11, 16);
  held.noise = textures(TextureKind::kCheckerboard, 12, 16);
  held.stats = train.stats;

  const auto result = train_pretext<float>(cfg, train);
  const auto rep = eval_pretext(result.network, cfg, held, 32);

  // Self-injection control: the noise dataset is the source dataset and
  // every crop is paired with itself.
  PretextConfig self_cfg = cfg;
  self_cfg.train.self_pair = true;
  PretextData self_data = train;
  self_data.noise = train.source;
  PretextData self_held = held;
  self_held.noise = held.source;
  const auto self_result = train_pretext<float>(self_cfg, self_data);
  const auto self_rep = eval_pretext(self_result.network, self_cfg, self_held, 32);
  double frac = 0.0;
  for (const auto& s : self_rep.samples) frac += s.mask_fraction;
  frac /= static_cast<double>(self_rep.samples.size());
  const double base = base_rate_focal_loss(frac, self_cfg.train.focal);
  const double gap = std::abs(self_rep.mean_loss - base) / base;

  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "pretext IoU %.4f on 32 held-out episodes; self-injection loss %.5f vs base rate %.5f "
                "(%.2f%% off), IoU %.4f",
                rep.mean_iou, self_rep.mean_loss, base, 100.0 * gap, self_rep.mean_iou);
  o.detail = buf;
  if (!(rep.mean_iou >= 0.9)) o.pass = false;
  if (!(gap <= 0.05)) o.pass = false;
  if (!(self_rep.mean_iou <= 0.2)) o.pass = false;
  return o;
}

// ---- 8. CLI determinism -----------------------------------------------------

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + INOD_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "inod_acceptance_cli";
  fs::remove_all(root);
  std::size_t compared = 0;
  std::vector<fs::path> runs;
  for (const char* name : {"a", "b"}) {
    const fs::path d = root / name;
    fs::create_directories(d);
    runs.push_back(d);
    detail::write_file(d / "run.toml", R"([paths]
source_dir = "data/src"
noise_dir = "data/noi"
out_dir = "train"

[mask]
crop_h = 64
crop_w = 64
seed = 21

[encoder]
stem = [{channels = 4, kernel = 3, stride = 2}]
levels = [{channels = 4, kernel = 3, stride = 2}, {channels = 8, kernel = 3, stride = 2}]
neck_channels = 4

[train]
epochs = 3
crop = 32
batch_size = 2
steps_per_epoch = 2
eval_samples = 4
seed = 9
)");
    const std::string steps[] = {
        "synth --kind stripes --count 4 --seed 1 --size 40 --out-dir data/src",
        "synth --kind checkerboard --count 4 --seed 2 --size 40 --out-dir data/noi",
        "mask-gen --config run.toml --count 10 --out-dir masks",
        "labels-gen --mask masks/mask_00003_c64x64_g4_seed*.pgm --task detect --out labels/detect.json",
        "labels-gen --mask masks/mask_00003_c64x64_g4_seed*.pgm --task semantic --out labels/semantic.pgm",
        "labels-gen --mask masks/mask_00003_c64x64_g4_seed*.pgm --task instance --out labels/instance.pgm",
        "split --config run.toml --mask masks/mask_00004_c64x64_g4_seed*.pgm --out-dir split",
        "pretrain --config run.toml",
        "eval --config run.toml --checkpoint train/checkpoint.inod --out eval.json",
        "stats --dir data/src --out stats.json",
        "inject-demo --config run.toml --source data/src/tex_00000.png --noise data/noi/tex_00002.png --out-dir demo",
    };
    for (const auto& s : steps) {
      const int code = run_cli(d, s);
      if (code != 0) o.fail("'" + s + "' exited with " + std::to_string(code));
    }
  }
  if (!o.pass) return o;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(runs[0]))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), runs[0]));
  std::sort(files.begin(), files.end());
  std::size_t other = 0;
  for (const auto& e : fs::recursive_directory_iterator(runs[1])) other += e.is_regular_file();
  if (other != files.size()) o.fail("runs produced different file sets");
  for (const auto& f : files) {
    if (!fs::exists(runs[1] / f) || detail::read_file(runs[0] / f) != detail::read_file(runs[1] / f)) {
      o.fail("artifact differs: " + f.string());
    }
    ++compared;
  }
  fs::remove_all(root);
  if (o.pass) {
    o.detail = std::to_string(compared) +
               " artifacts byte-identical across two runs (synth, mask-gen, labels-gen x3, split, "
               "pretrain, eval, stats, inject-demo)";
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace inod

int main() {
  using namespace inod;
  const Criterion criteria[] = {
      {1, "mask conservation", 10.0, mask_conservation},
      {2, "quantity control", 30.0, quantity_control},
      {3, "injection exactness", 60.0, injection_exactness},
      {4, "pseudo-label oracle equivalence", 60.0, pseudo_labels},
      {5, "gradient correctness", 300.0, gradients},
      {6, "schedule fidelity", 0.0, schedule},
      {7, "end-to-end learnability", 600.0, learnability},
      {8, "CLI determinism", 0.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += " (runtime " + fmt("%.1f", secs) + " s exceeds " + fmt("%.0f", c.budget_s) + " s)";
    }
    std::printf("%s criterion %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
