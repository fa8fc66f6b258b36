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

// Toy multi-level convolutional encoder with injection hooks, plus the
// upsample-and-add neck and the per-cell discriminator head.
//
// Data flow for one injection episode:
//
//   noise image  --encode_plain-->  {E^N_1 .. E^N_L}
//   source image --stem--> x_0
//   for each level l:  E^S_l = relu(conv_l(x_{l-1}))
//                      E^C_l = noise where N_l is set, E^S_l elsewhere
//                      x_l   = E^C_l
//   neck({E^C_l}) -> one map at the label resolution -> head -> logits
//
// Every entry point exists twice: on a Tape (used for training) and on plain
// tensors (thin wrappers that record onto a throwaway tape).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inod/autodiff.hpp"
#include "inod/errors.hpp"
#include "inod/layer_split.hpp"
#include "inod/random.hpp"
#include "inod/tensor.hpp"

namespace inod {

struct ConvSpec {
  std::size_t out_channels = 16;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  bool inject = true;  // ignored for stem stages

  std::size_t padding() const { return kernel / 2; }
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct EncoderConfig {
  std::size_t in_channels = 3;
  // Stages run before the first injection level.
  std::vector<ConvSpec> stem{{16, 3, 2, false}};
  // Injection levels; with the default stem their cumulative strides are
  // 4, 8, 16 and 32.
  std::vector<ConvSpec> levels{{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
  std::size_t neck_channels = 32;
  std::uint64_t seed = 0;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;

  std::size_t num_levels() const { return levels.size(); }

  std::vector<std::size_t> level_strides() const {
    std::size_t s = 1;
    for (const auto& c : stem) s *= c.stride;
    std::vector<std::size_t> out;
    for (const auto& c : levels) out.push_back(s *= c.stride);
    return out;
  }

  std::vector<bool> injection_sites() const {
    std::vector<bool> out;
    for (const auto& c : levels) out.push_back(c.inject);
    return out;
  }

  void validate() const {
    if (levels.empty()) throw ConfigError("encoder needs at least one level");
    if (in_channels == 0 || neck_channels == 0) {
      throw ConfigError("encoder channel counts must be positive");
    }
    auto check = [](const ConvSpec& c, const std::string& where) {
      if (c.out_channels == 0 || c.stride == 0) {
        throw ConfigError(where + ": out_channels and stride must be positive");
      }
      if (c.kernel == 0 || c.kernel % 2 == 0) {
        throw ConfigError(where + ": kernel must be odd, got " + std::to_string(c.kernel));
      }
    };
    for (std::size_t i = 0; i < stem.size(); ++i) check(stem[i], "stem " + std::to_string(i));
    for (std::size_t i = 0; i < levels.size(); ++i) {
      check(levels[i], "level " + std::to_string(i));
    }
  }

  void validate(std::size_t crop_h, std::size_t crop_w) const {
    validate();
    std::size_t s = 1;
    auto step = [&](const ConvSpec& c) {
      s *= c.stride;
      if (crop_h % s || crop_w % s) {
        throw ConfigError("crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                          " is not divisible by cumulative stride " + std::to_string(s));
      }
    };
    for (const auto& c : stem) step(c);
    for (const auto& c : levels) step(c);
  }

  std::vector<LevelDim> level_dims(std::size_t crop_h, std::size_t crop_w) const {
    validate(crop_h, crop_w);
    std::vector<LevelDim> out;
    for (auto s : level_strides()) out.push_back({crop_h / s, crop_w / s});
    return out;
  }

  // Identity of the architecture (not of the weights).
  std::uint64_t fingerprint() const {
    std::uint64_t h = mix64(in_channels) ^ mix64(neck_channels + 0x100);
    auto fold = [&h](const ConvSpec& c, std::uint64_t tag) {
      h = mix64(h ^ tag);
      h = mix64(h ^ c.out_channels);
      h = mix64(h ^ (c.kernel << 8) ^ (c.stride << 16) ^ (c.inject ? 1u : 0u));
    };
    for (const auto& c : stem) fold(c, 0x51);
    for (const auto& c : levels) fold(c, 0x1e);
    return h;
  }
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

// Encoder, neck and head parameters in a fixed order.
template <typename T>
class Network {
 public:
  explicit Network(EncoderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(derive_seed(cfg_.seed, 0x1e7));
    std::size_t in = cfg_.in_channels;
    for (std::size_t i = 0; i < cfg_.stem.size(); ++i) {
      add_conv("stem" + std::to_string(i), cfg_.stem[i].out_channels, in,
               cfg_.stem[i].kernel, 6.0, rng);
      in = cfg_.stem[i].out_channels;
    }
    for (std::size_t i = 0; i < cfg_.levels.size(); ++i) {
      add_conv("level" + std::to_string(i), cfg_.levels[i].out_channels, in,
               cfg_.levels[i].kernel, 6.0, rng);
      in = cfg_.levels[i].out_channels;
    }
    for (std::size_t i = 0; i < cfg_.levels.size(); ++i) {
      add_conv("neck" + std::to_string(i), cfg_.neck_channels, cfg_.levels[i].out_channels,
               1, 3.0, rng);
    }
    add_conv("head", 1, cfg_.neck_channels, 1, 3.0, rng);
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  std::vector<NamedTensor<T>>& parameters() noexcept { return params_; }
  const std::vector<NamedTensor<T>>& parameters() const noexcept { return params_; }

  Tensor<T>& param(const std::string& name) { return params_.at(index_of(name)).value; }
  const Tensor<T>& param(const std::string& name) const {
    return params_.at(index_of(name)).value;
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].name == name) return i;
    }
    throw ConfigError("network has no parameter named '" + name + "'");
  }

  std::size_t stem_index(std::size_t i) const { return 2 * i; }
  std::size_t level_index(std::size_t i) const { return 2 * (cfg_.stem.size() + i); }
  std::size_t neck_index(std::size_t i) const {
    return 2 * (cfg_.stem.size() + cfg_.levels.size() + i);
  }
  std::size_t head_index() const {
    return 2 * (cfg_.stem.size() + 2 * cfg_.levels.size());
  }

  template <typename U>
  Network<U> cast() const {
    Network<U> out(cfg_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.parameters()[i].value = params_[i].value.template cast<U>();
    }
    return out;
  }

 private:
  // Weights uniform in +-sqrt(gain / fan_in); biases zero.
  void add_conv(const std::string& name, std::size_t out_c, std::size_t in_c,
                std::size_t k, double gain, Rng& rng) {
    const double bound = std::sqrt(gain / static_cast<double>(in_c * k * k));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor<T> w({out_c, in_c, k, k});
    for (auto& v : w.data()) v = static_cast<T>(u(rng));
    params_.push_back({name + ".weight", std::move(w)});
    params_.push_back({name + ".bias", Tensor<T>({out_c})});
  }

  EncoderConfig cfg_;
  std::vector<NamedTensor<T>> params_;
};

// Network parameters registered as leaves on one tape.
template <typename T>
class BoundNetwork {
 public:
  BoundNetwork(Tape<T>& tape, const Network<T>& net, bool requires_grad) : net_(&net) {
    vars_.reserve(net.parameters().size());
    for (const auto& p : net.parameters()) vars_.push_back(tape.leaf(p.value, requires_grad));
  }

  const Network<T>& network() const { return *net_; }
  const EncoderConfig& config() const { return net_->config(); }
  const std::vector<Var<T>>& vars() const { return vars_; }
  const Var<T>& var(std::size_t i) const { return vars_.at(i); }

 private:
  const Network<T>* net_;
  std::vector<Var<T>> vars_;
};

template <typename T>
struct FeaturePyramid {
  std::vector<Tensor<T>> levels;
  std::vector<std::size_t> strides;  // cumulative stride of each level
  std::uint64_t fingerprint = 0;     // EncoderConfig::fingerprint() of the producer
};

template <typename T>
struct VarPyramid {
  std::vector<Var<T>> levels;
  std::vector<std::size_t> strides;
  std::uint64_t fingerprint = 0;

  FeaturePyramid<T> values() const {
    FeaturePyramid<T> out{{}, strides, fingerprint};
    for (const auto& v : levels) out.levels.push_back(v.value());
    return out;
  }
};

namespace detail {

template <typename T>
Var<T> conv_relu(const BoundNetwork<T>& net, std::size_t index, const ConvSpec& spec,
                 const Var<T>& x) {
  return ad::relu(ad::conv2d(x, net.var(index), net.var(index + 1), spec.stride,
                             spec.padding()));
}

template <typename T>
void check_image(const EncoderConfig& cfg, const Shape& s) {
  if (s.size() != 3 || s[0] != cfg.in_channels) {
    throw DimensionError("encoder expects a " + std::to_string(cfg.in_channels) +
                         "xHxW image, got " + shape_str(s));
  }
  cfg.validate(s[1], s[2]);
}

template <typename T>
Var<T> run_stem(const BoundNetwork<T>& net, const Var<T>& image) {
  const auto& cfg = net.config();
  check_image<T>(cfg, image.shape());
  Var<T> x = image;
  for (std::size_t i = 0; i < cfg.stem.size(); ++i) {
    x = conv_relu(net, net.network().stem_index(i), cfg.stem[i], x);
  }
  return x;
}

}  // namespace detail

// Plain encoding (no injection) of an image into its level feature maps.
template <typename T>
VarPyramid<T> encode_plain(const BoundNetwork<T>& net, const Var<T>& image) {
  const auto& cfg = net.config();
  VarPyramid<T> out{{}, cfg.level_strides(), cfg.fingerprint()};
  Var<T> x = detail::run_stem(net, image);
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    x = detail::conv_relu(net, net.network().level_index(l), cfg.levels[l], x);
    out.levels.push_back(x);
  }
  return out;
}

// Composite map: noise features where the level mask is set, source features
// elsewhere. Whole channel columns are replaced.
template <typename T>
Var<T> inject(const Var<T>& source_l, const Var<T>& noise_l, const BinaryGrid& mask_l) {
  if (source_l.shape() != noise_l.shape()) {
    throw DimensionError("inject: source " + shape_str(source_l.shape()) + " vs noise " +
                         shape_str(noise_l.shape()));
  }
  return ad::masked_merge(noise_l, source_l, mask_l);
}

template <typename T>
VarPyramid<T> encode_with_injection(const BoundNetwork<T>& net, const Var<T>& source,
                                    const VarPyramid<T>& noise, const LayerMaskSet& masks) {
  const auto& cfg = net.config();
  if (noise.fingerprint != cfg.fingerprint() || noise.levels.size() != cfg.num_levels()) {
    throw ConfigError("noise pyramid was produced by a different encoder configuration");
  }
  if (masks.levels() != cfg.num_levels() || masks.layer_grids.size() != cfg.num_levels()) {
    throw ConfigError("layer mask set has " + std::to_string(masks.levels()) +
                      " levels, encoder has " + std::to_string(cfg.num_levels()));
  }
  VarPyramid<T> out{{}, cfg.level_strides(), cfg.fingerprint()};
  Var<T> x = detail::run_stem(net, source);
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    Var<T> src = detail::conv_relu(net, net.network().level_index(l), cfg.levels[l], x);
    const BinaryGrid& m = masks.layer_grids[l];
    const auto& s = src.shape();
    if (noise.levels[l].shape() != s) {
      throw ConfigError("noise level " + std::to_string(l) + " has shape " +
                        shape_str(noise.levels[l].shape()) + ", source has " + shape_str(s));
    }
    if (m.height() != s[1] || m.width() != s[2]) {
      throw DimensionError("layer mask " + std::to_string(l) + " is " +
                           std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                           ", level is " + std::to_string(s[1]) + "x" + std::to_string(s[2]));
    }
    const bool any = count_ones(m) > 0;
    if (any && !cfg.levels[l].inject) {
      throw ConfigError("layer mask " + std::to_string(l) +
                        " is non-empty but injection is disabled at that level");
    }
    x = any ? inject(src, noise.levels[l], m) : src;
    out.levels.push_back(x);
  }
  return out;
}

// Per-level 1x1 conv to the neck width, nearest-neighbour resize to the
// output resolution, then a sum over levels.
template <typename T>
Var<T> neck(const BoundNetwork<T>& net, const VarPyramid<T>& pyr, LevelDim out) {
  const auto& cfg = net.config();
  if (pyr.levels.size() != cfg.num_levels()) {
    throw ConfigError("neck: pyramid has " + std::to_string(pyr.levels.size()) +
                      " levels, network has " + std::to_string(cfg.num_levels()));
  }
  std::optional<Var<T>> acc;
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    const std::size_t i = net.network().neck_index(l);
    Var<T> y = ad::conv2d(pyr.levels[l], net.var(i), net.var(i + 1), 1, 0);
    y = ad::resize_nearest(y, out.h, out.w);
    acc = acc ? ad::add(*acc, y) : y;
  }
  return *acc;
}

// 1x1 conv to a single logit channel.
template <typename T>
Var<T> head(const BoundNetwork<T>& net, const Var<T>& features) {
  const std::size_t i = net.network().head_index();
  return ad::conv2d(features, net.var(i), net.var(i + 1), 1, 0);
}

// ---- plain-tensor wrappers -------------------------------------------------

template <typename T>
FeaturePyramid<T> encode_plain(const Tensor<T>& image, const Network<T>& net) {
  Tape<T> tape;
  BoundNetwork<T> bound(tape, net, false);
  return encode_plain(bound, tape.leaf(image)).values();
}

template <typename T>
Tensor<T> inject(const Tensor<T>& source_l, const Tensor<T>& noise_l, const BinaryGrid& mask_l) {
  if (source_l.shape() != noise_l.shape()) {
    throw DimensionError("inject: source " + shape_str(source_l.shape()) + " vs noise " +
                         shape_str(noise_l.shape()));
  }
  return masked_merge(noise_l, source_l, mask_l);
}

template <typename T>
VarPyramid<T> as_leaves(Tape<T>& tape, const FeaturePyramid<T>& pyr) {
  VarPyramid<T> out{{}, pyr.strides, pyr.fingerprint};
  for (const auto& t : pyr.levels) out.levels.push_back(tape.leaf(t));
  return out;
}

template <typename T>
FeaturePyramid<T> encode_with_injection(const Tensor<T>& source, const FeaturePyramid<T>& noise,
                                        const LayerMaskSet& masks, const Network<T>& net) {
  Tape<T> tape;
  BoundNetwork<T> bound(tape, net, false);
  return encode_with_injection(bound, tape.leaf(source), as_leaves(tape, noise), masks).values();
}

template <typename T>
Tensor<T> neck(const FeaturePyramid<T>& pyr, const Network<T>& net, LevelDim out) {
  Tape<T> tape;
  BoundNetwork<T> bound(tape, net, false);
  return neck(bound, as_leaves(tape, pyr), out).value();
}

}  // namespace inod
