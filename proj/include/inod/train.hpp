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

// Desk-scale training and evaluation of the injected-noise discriminator.
//
// One episode = one (source, noise) image pair: both crops are augmented and
// normalized with source statistics, a noise mask is drawn and split across
// the injection levels, the source is encoded with injection, and the head
// predicts per mask cell whether the composite came from the noise image.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inod/autodiff.hpp"
#include "inod/data.hpp"
#include "inod/encoder.hpp"
#include "inod/errors.hpp"
#include "inod/focal_loss.hpp"
#include "inod/image.hpp"
#include "inod/layer_split.hpp"
#include "inod/noise_mask.hpp"
#include "inod/pseudo_labels.hpp"
#include "inod/random.hpp"

namespace inod {

enum class LabelResolution { kCanonical, kCrop };
enum class Precision { kSingle, kDouble };

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 8;          // effective batch on desk hardware
  std::size_t reference_batch_size = 256;  // recorded for reference only
  std::size_t steps_per_epoch = 0;     // 0 = ceil(#source images / batch)
  double base_lr = 0.02;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  double lr_decay = 0.1;
  std::vector<double> milestones{0.6, 0.8};  // fractions of the epoch budget
  std::size_t crop = 224;
  std::uint64_t seed = 0;
  FocalLossParams focal{};
  LabelResolution label_resolution = LabelResolution::kCanonical;
  Precision precision = Precision::kSingle;
  // Pair every source crop with itself as the noise image (control runs).
  bool self_pair = false;
  std::size_t eval_samples = 32;

  std::vector<std::size_t> milestone_epochs() const {
    std::vector<std::size_t> out;
    for (double f : milestones) {
      out.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(epochs) + 1e-9)));
    }
    return out;
  }

  void validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(base_lr >= 0.0)) throw ConfigError("train.base_lr must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1]");
    for (auto m : milestone_epochs()) {
      if (m == 0 || m >= epochs) {
        throw ConfigError("train.milestones must fall strictly inside (0, epochs); got epoch " +
                          std::to_string(m) + " of " + std::to_string(epochs));
      }
    }
    if (crop == 0) throw ConfigError("train.crop must be positive");
    if (!(focal.alpha >= 0.0 && focal.alpha <= 1.0) || !(focal.gamma >= 0.0)) {
      throw ConfigError("train.focal_alpha must lie in [0, 1] and focal_gamma be >= 0");
    }
  }
};

// Everything that defines a pretext run apart from file paths.
struct PretextConfig {
  TrainConfig train{};
  MaskGenConfig mask{};
  EncoderConfig encoder{};
  AugmentationConfig augment{};
  RasterMode raster = RasterMode::kCoverage;

  // Crop dims of the mask follow the training crop.
  MaskGenConfig mask_for_crop() const {
    MaskGenConfig m = mask;
    m.crop_h = m.crop_w = train.crop;
    return m;
  }

  LevelDim label_dims() const {
    if (train.label_resolution == LabelResolution::kCrop) return {train.crop, train.crop};
    const auto m = mask_for_crop();
    return {m.grid_h(), m.grid_w()};
  }

  void validate() const {
    train.validate();
    mask_for_crop().validate();
    encoder.validate(train.crop, train.crop);
    augment.validate();
    bool any_site = false;
    for (const auto& l : encoder.levels) any_site = any_site || l.inject;
    if (!any_site) throw ConfigError("encoder has no injection level enabled");
  }
};

// Learning rate for an epoch: base_lr times lr_decay for every milestone
// already reached.
inline double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  if (epoch >= cfg.epochs) {
    throw ArgumentError("epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(cfg.epochs) + ")");
  }
  double lr = cfg.base_lr;
  for (auto m : cfg.milestone_epochs()) {
    if (epoch >= m) lr *= cfg.lr_decay;
  }
  return lr;
}

template <typename T>
struct SgdState {
  std::vector<Tensor<T>> velocity;
};

// Momentum SGD with coupled weight decay:
//   v <- momentum * v + (g + weight_decay * theta);  theta <- theta - lr * v
template <typename T>
void sgd_step(std::vector<NamedTensor<T>>& params, const std::vector<Tensor<T>>& grads, double lr,
              double momentum, double weight_decay, SgdState<T>& state) {
  if (grads.size() != params.size()) {
    throw DimensionError("sgd_step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  if (state.velocity.empty()) {
    for (const auto& p : params) state.velocity.emplace_back(p.value.shape());
  }
  if (state.velocity.size() != params.size()) {
    throw DimensionError("sgd_step: optimizer state does not match the parameter list");
  }
  const T mu = static_cast<T>(momentum), wd = static_cast<T>(weight_decay),
          eta = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].value;
    auto& v = state.velocity[i];
    if (grads[i].shape() != theta.shape() || v.shape() != theta.shape()) {
      throw DimensionError("sgd_step: shape mismatch for '" + params[i].name + "': param " +
                           shape_str(theta.shape()) + ", grad " + shape_str(grads[i].shape()) +
                           ", state " + shape_str(v.shape()));
    }
    for (std::size_t k = 0; k < theta.size(); ++k) {
      v[k] = mu * v[k] + (grads[i][k] + wd * theta[k]);
      theta[k] -= eta * v[k];
    }
  }
}

// Intersection over union of two binary grids; 1 when both are empty.
inline double iou(const BinaryGrid& pred, const BinaryGrid& truth) {
  if (pred.height() != truth.height() || pred.width() != truth.width()) {
    throw DimensionError("iou: grids differ in size");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool a = pred.data()[i] != 0, b = truth.data()[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Cells whose probability exceeds 0.5 (logit > 0).
template <typename T>
BinaryGrid threshold_logits(const Tensor<T>& logits, LevelDim dims) {
  if (logits.size() != dims.h * dims.w) throw DimensionError("logit map does not match label dims");
  BinaryGrid out(dims.h, dims.w);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = logits[i] > T{0} ? 1 : 0;
  return out;
}

// ---- data ---------------------------------------------------------------------

struct DatasetPairing {
  std::filesystem::path source_dir;
  std::filesystem::path noise_dir;
  // Normalization statistics; computed from source_dir when absent.
  std::optional<DatasetStats> stats;
};

using LogFn = std::function<void(const std::string&)>;

// Decodes every image of a directory; undecodable files are skipped with a
// warning, an empty result is an error.
inline std::vector<Image> load_image_dir(const std::filesystem::path& dir, const LogFn& log = {}) {
  std::vector<Image> out;
  for (const auto& path : list_images(dir)) {
    try {
      out.push_back(read_image(path));
    } catch (const Error& e) {
      if (log) log(std::string("warning: skipping ") + path.string() + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError("no decodable images in " + dir.string());
  return out;
}

inline DatasetStats stats_for_dir(const std::filesystem::path& dir, const LogFn& log = {}) {
  StatsAccumulator acc;
  std::size_t ok = 0;
  for (const auto& path : list_images(dir)) {
    try {
      acc.add(read_image(path));
      ++ok;
    } catch (const Error& e) {
      if (log) log(std::string("warning: skipping ") + path.string() + ": " + e.what());
    }
  }
  if (ok == 0) throw DataError("no decodable images in " + dir.string());
  return acc.finish();
}

struct PretextData {
  std::vector<Image> source;
  std::vector<Image> noise;
  DatasetStats stats;
};

inline PretextData load_pretext_data(const DatasetPairing& pairing, const LogFn& log = {}) {
  PretextData d;
  d.source = load_image_dir(pairing.source_dir, log);
  d.noise = load_image_dir(pairing.noise_dir, log);
  d.stats = pairing.stats ? *pairing.stats : compute_stats(d.source);
  return d;
}

template <typename T>
struct Episode {
  Tensor<T> source;
  Tensor<T> noise;
  NoiseMask mask;
  LayerMaskSet layers;
  BinaryGrid label;
};

// Builds one episode entirely from `rng`, so episodes keyed by
// derive_seed(seed, index) are reproducible in any order.
template <typename T>
Episode<T> make_episode(const PretextConfig& cfg, const PretextData& data, Rng& rng) {
  const std::size_t crop = cfg.train.crop;
  const auto& src_img = data.source[std::uniform_int_distribution<std::size_t>(0, data.source.size() - 1)(rng)];
  const Image src = augment(random_crop(src_img, crop, crop, rng), cfg.augment, rng);
  Image noise;
  if (cfg.train.self_pair) {
    noise = src;
  } else {
    const auto& noise_img =
        data.noise[std::uniform_int_distribution<std::size_t>(0, data.noise.size() - 1)(rng)];
    noise = augment(random_crop(noise_img, crop, crop, rng), cfg.augment, rng);
  }
  MaskGenConfig mcfg = cfg.mask_for_crop();
  mcfg.seed = rng();
  Episode<T> ep;
  ep.source = normalize<T>(src, data.stats);
  ep.noise = normalize<T>(noise, data.stats);
  ep.mask = gen_noise_mask(mcfg);
  SplitOptions opts;
  opts.enabled = cfg.encoder.injection_sites();
  opts.raster = cfg.raster;
  ep.layers = split_mask(ep.mask, cfg.encoder.level_dims(crop, crop), rng, opts);
  const auto dims = cfg.label_dims();
  ep.label = semantic_from_mask(ep.mask, dims.h, dims.w);
  return ep;
}

// Records the full injected forward pass; returns the 1 x H x W logit map.
template <typename T>
Var<T> forward_logits(const BoundNetwork<T>& net, Tape<T>& tape, const Episode<T>& ep,
                      LevelDim label_dims) {
  const auto noise_pyr = encode_plain(net, tape.leaf(ep.noise));
  const auto composite = encode_with_injection(net, tape.leaf(ep.source), noise_pyr, ep.layers);
  return head(net, neck(net, composite, label_dims));
}

// ---- training -----------------------------------------------------------------

struct MetricsRow {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global step count at the end of the epoch
  double lr = 0.0;
  double loss = 0.0;         // mean step loss over the epoch
  double pretext_iou = 0.0;  // mean per-episode IoU over the epoch
};

template <typename T>
struct TrainResult {
  Network<T> network;
  std::vector<MetricsRow> metrics;
  std::vector<double> step_losses;
  DatasetStats stats;
};

struct TrainOptions {
  LogFn log;
  // Called after every epoch; lets callers write checkpoints as they go.
  std::function<void(std::size_t epoch)> on_epoch;
};

template <typename T>
TrainResult<T> train_pretext(const PretextConfig& cfg, const PretextData& data,
                             const TrainOptions& opts = {}) {
  cfg.validate();
  TrainResult<T> result{Network<T>(cfg.encoder), {}, {}, data.stats};
  Network<T>& net = result.network;
  SgdState<T> sgd;
  const std::size_t batch = cfg.train.batch_size;
  const std::size_t steps_per_epoch =
      cfg.train.steps_per_epoch ? cfg.train.steps_per_epoch
                                : (data.source.size() + batch - 1) / batch;
  const LevelDim label_dims = cfg.label_dims();

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg.train, epoch);
    double epoch_loss = 0.0, epoch_iou = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      Tape<T> tape;
      BoundNetwork<T> bound(tape, net, true);
      std::optional<Var<T>> total;
      double step_iou = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        Rng rng = make_rng(cfg.train.seed, step * batch + b);
        const Episode<T> ep = make_episode<T>(cfg, data, rng);
        const Var<T> logits = forward_logits(bound, tape, ep, label_dims);
        const Var<T> loss = focal_loss(logits, ep.label, cfg.train.focal);
        total = total ? ad::add(*total, loss) : loss;
        step_iou += iou(threshold_logits(logits.value(), label_dims), ep.label);
      }
      const Var<T> loss = ad::scale(*total, T{1} / static_cast<T>(batch));
      const auto grads = tape.backward(loss);
      std::vector<Tensor<T>> param_grads;
      param_grads.reserve(bound.vars().size());
      for (const auto& v : bound.vars()) param_grads.push_back(grads[v]);
      sgd_step(net.parameters(), param_grads, lr, cfg.train.momentum, cfg.train.weight_decay, sgd);

      const double l = static_cast<double>(loss.value().item());
      if (!std::isfinite(l)) throw DataError("training diverged: non-finite loss at step " + std::to_string(step));
      result.step_losses.push_back(l);
      epoch_loss += l;
      epoch_iou += step_iou / static_cast<double>(batch);
    }
    const auto n = static_cast<double>(steps_per_epoch);
    result.metrics.push_back({epoch, step, lr, epoch_loss / n, epoch_iou / n});
    if (opts.log) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %zu step %zu lr %.6g loss %.6f iou %.4f", epoch,
                    step, lr, epoch_loss / n, epoch_iou / n);
      opts.log(line);
    }
    if (opts.on_epoch) opts.on_epoch(epoch);
  }
  return result;
}

// CSV with columns epoch, step, lr, loss, pretext_iou.
inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "epoch,step,lr,loss,pretext_iou\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%zu,%zu,%.17g,%.17g,%.17g\n", r.epoch, r.step, r.lr, r.loss,
                  r.pretext_iou);
    out += line;
  }
  return out;
}

// ---- evaluation ---------------------------------------------------------------

struct EvalSample {
  std::size_t index = 0;
  double iou = 0.0;
  double loss = 0.0;
  double mask_fraction = 0.0;
};

struct EvalReport {
  double mean_iou = 0.0;
  double mean_loss = 0.0;
  std::vector<EvalSample> samples;
};

// Evaluation episodes use their own seed stream, disjoint from training.
inline constexpr std::uint64_t kEvalStream = 0x5eed0000'00000000ULL;

template <typename T>
using Predictor = std::function<Tensor<T>(const Episode<T>&)>;

template <typename T>
EvalReport eval_with(const PretextConfig& cfg, const PretextData& data, std::size_t n_samples,
                     const Predictor<T>& predict) {
  if (n_samples == 0) throw ArgumentError("eval needs at least one sample");
  EvalReport report;
  const LevelDim dims = cfg.label_dims();
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng = make_rng(cfg.train.seed, kEvalStream + i);
    const Episode<T> ep = make_episode<T>(cfg, data, rng);
    const Tensor<T> logits = predict(ep);
    EvalSample s;
    s.index = i;
    s.iou = iou(threshold_logits(logits, dims), ep.label);
    s.loss = static_cast<double>(focal_loss_value(logits, ep.label, cfg.train.focal));
    s.mask_fraction = mask_fraction(ep.mask);
    report.mean_iou += s.iou;
    report.mean_loss += s.loss;
    report.samples.push_back(s);
  }
  report.mean_iou /= static_cast<double>(n_samples);
  report.mean_loss /= static_cast<double>(n_samples);
  return report;
}

// IoU of the thresholded head output against the true mask, averaged over
// freshly generated injection episodes.
template <typename T>
EvalReport eval_pretext(const Network<T>& net, const PretextConfig& cfg, const PretextData& data,
                        std::size_t n_samples) {
  if (!(net.config() == cfg.encoder)) {
    throw ConfigError("network architecture does not match the evaluation config");
  }
  const LevelDim dims = cfg.label_dims();
  return eval_with<T>(cfg, data, n_samples, [&](const Episode<T>& ep) {
    Tape<T> tape;
    BoundNetwork<T> bound(tape, net, false);
    return forward_logits(bound, tape, ep, dims).value();
  });
}

// Reference predictor that reads the true mask: logits +10 on noise cells and
// -10 elsewhere.
template <typename T>
EvalReport eval_oracle(const PretextConfig& cfg, const PretextData& data, std::size_t n_samples) {
  return eval_with<T>(cfg, data, n_samples, [](const Episode<T>& ep) {
    Tensor<T> logits({1, ep.label.height(), ep.label.width()});
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = ep.label.data()[i] ? T{10} : T{-10};
    return logits;
  });
}

}  // namespace inod
