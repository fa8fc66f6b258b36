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

// Image-side data pipeline: crops, random augmentation, dataset statistics
// and per-channel normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "inod/errors.hpp"
#include "inod/image.hpp"
#include "inod/ops.hpp"
#include "inod/random.hpp"
#include "inod/tensor.hpp"

namespace inod {

struct AugmentationConfig {
  double hflip_prob = 0.5;
  double blur_prob = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double grayscale_prob = 0.2;
  double jitter_prob = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;

  static AugmentationConfig none() {
    AugmentationConfig c;
    c.hflip_prob = c.blur_prob = c.grayscale_prob = c.jitter_prob = 0.0;
    return c;
  }

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string("augment.") + name + " must lie in [0, 1]");
      }
    };
    prob(hflip_prob, "hflip_prob");
    prob(blur_prob, "blur_prob");
    prob(grayscale_prob, "grayscale_prob");
    prob(jitter_prob, "jitter_prob");
    if (!(blur_sigma_min > 0.0 && blur_sigma_min <= blur_sigma_max)) {
      throw ConfigError("augment.blur_sigma must be an increasing positive range");
    }
    if (brightness < 0.0 || contrast < 0.0 || saturation < 0.0) {
      throw ConfigError("augment jitter strengths must be non-negative");
    }
    if (!(hue >= 0.0 && hue <= 0.5)) throw ConfigError("augment.hue must lie in [0, 0.5]");
  }
};

// ---- individual transforms --------------------------------------------------

inline Image hflip(const Image& img) {
  Image out(img.height, img.width);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x)
        out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
  return out;
}

inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

inline Image grayscale(const Image& img) {
  Image out(img.height, img.width);
  for (std::size_t i = 0; i < img.plane(); ++i) {
    const float l = std::clamp(
        luma(img.data[i], img.data[img.plane() + i], img.data[2 * img.plane() + i]), 0.0f, 1.0f);
    out.data[i] = out.data[img.plane() + i] = out.data[2 * img.plane() + i] = l;
  }
  return out;
}

// Separable Gaussian blur, radius ceil(3 sigma), clamp-to-edge borders.
inline Image gaussian_blur(const Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> kernel(2 * radius + 1);
  float norm = 0.0f;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = static_cast<float>(std::exp(-(i * i) / (2.0 * sigma * sigma)));
    norm += kernel[i + radius];
  }
  for (auto& k : kernel) k /= norm;

  const int h = static_cast<int>(img.height), w = static_cast<int>(img.width);
  Image tmp(img.height, img.width), out(img.height, img.width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * img.at(c, y, std::clamp(x + k, 0, w - 1));
        tmp.at(c, y, x) = acc;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * tmp.at(c, std::clamp(y + k, 0, h - 1), x);
        out.at(c, y, x) = std::clamp(acc, 0.0f, 1.0f);
      }
  }
  return out;
}

namespace detail {

inline void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d <= 0.0f) {
    h = 0.0f;
  } else if (mx == r) {
    h = std::fmod((g - b) / d + 6.0f, 6.0f) / 6.0f;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0f) / 6.0f;
  } else {
    h = ((r - g) / d + 4.0f) / 6.0f;
  }
}

inline void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float hh = h * 6.0f;
  const int sector = static_cast<int>(std::floor(hh)) % 6;
  const float f = hh - std::floor(hh);
  const float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace detail

// Brightness, contrast, saturation and hue jitter with the given factors
// (brightness/contrast/saturation multiplicative, hue an additive turn).
inline Image color_jitter(const Image& img, float brightness, float contrast, float saturation,
                          float hue_shift) {
  Image out = img;
  const std::size_t n = img.plane();
  float* r = out.data.data();
  float* g = r + n;
  float* b = g + n;
  for (auto& v : out.data) v = std::clamp(v * brightness, 0.0f, 1.0f);

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += luma(r[i], g[i], b[i]);
  const auto m = static_cast<float>(mean / static_cast<double>(n));
  for (auto& v : out.data) v = std::clamp(m + contrast * (v - m), 0.0f, 1.0f);

  for (std::size_t i = 0; i < n; ++i) {
    const float l = luma(r[i], g[i], b[i]);
    r[i] = std::clamp(l + saturation * (r[i] - l), 0.0f, 1.0f);
    g[i] = std::clamp(l + saturation * (g[i] - l), 0.0f, 1.0f);
    b[i] = std::clamp(l + saturation * (b[i] - l), 0.0f, 1.0f);
  }

  if (hue_shift != 0.0f) {
    for (std::size_t i = 0; i < n; ++i) {
      float h, s, v;
      detail::rgb_to_hsv(r[i], g[i], b[i], h, s, v);
      h = std::fmod(h + hue_shift + 1.0f, 1.0f);
      detail::hsv_to_rgb(h, s, v, r[i], g[i], b[i]);
    }
  }
  return out;
}

// Applies jitter, grayscale, blur and horizontal flip, each independently
// with its probability. Every Bernoulli draw is taken whether or not the
// transform fires, so the random stream does not depend on image content.
inline Image augment(const Image& img, const AugmentationConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image out = img;
  if (unit(rng) < cfg.jitter_prob) {
    auto factor = [&](double strength) {
      return static_cast<float>(
          std::uniform_real_distribution<double>(std::max(0.0, 1.0 - strength), 1.0 + strength)(rng));
    };
    const float fb = factor(cfg.brightness);
    const float fc = factor(cfg.contrast);
    const float fs = factor(cfg.saturation);
    const auto fh = static_cast<float>(std::uniform_real_distribution<double>(-cfg.hue, cfg.hue)(rng));
    out = color_jitter(out, fb, fc, fs, fh);
  }
  if (unit(rng) < cfg.grayscale_prob) out = grayscale(out);
  if (unit(rng) < cfg.blur_prob) {
    const double sigma =
        std::uniform_real_distribution<double>(cfg.blur_sigma_min, cfg.blur_sigma_max)(rng);
    out = gaussian_blur(out, sigma);
  }
  if (unit(rng) < cfg.hflip_prob) out = hflip(out);
  for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

// ---- crops -------------------------------------------------------------------

// Nearest-neighbour rescale so both sides are at least the crop size.
inline Image ensure_min_size(const Image& img, std::size_t min_h, std::size_t min_w) {
  if (img.height >= min_h && img.width >= min_w) return img;
  const double scale = std::max(static_cast<double>(min_h) / static_cast<double>(img.height),
                                static_cast<double>(min_w) / static_cast<double>(img.width));
  const auto h = std::max(min_h, static_cast<std::size_t>(std::ceil(img.height * scale)));
  const auto w = std::max(min_w, static_cast<std::size_t>(std::ceil(img.width * scale)));
  Image out(h, w);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out.at(c, y, x) = img.at(c, nearest_source_index(y, img.height, h),
                                 nearest_source_index(x, img.width, w));
  return out;
}

inline Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  Image out(h, w);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
  return out;
}

inline Image random_crop(const Image& img, std::size_t h, std::size_t w, Rng& rng) {
  const Image big = ensure_min_size(img, h, w);
  const auto y0 = std::uniform_int_distribution<std::size_t>(0, big.height - h)(rng);
  const auto x0 = std::uniform_int_distribution<std::size_t>(0, big.width - w)(rng);
  return crop(big, y0, x0, h, w);
}

inline Image center_crop(const Image& img, std::size_t h, std::size_t w) {
  const Image big = ensure_min_size(img, h, w);
  return crop(big, (big.height - h) / 2, (big.width - w) / 2, h, w);
}

// ---- statistics and normalization -------------------------------------------

struct DatasetStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
  std::size_t n_images = 0;

  static DatasetStats identity() { return {}; }
};

inline void to_json(nlohmann::json& j, const DatasetStats& s) {
  j = nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"n_images", s.n_images}};
}

inline void from_json(const nlohmann::json& j, DatasetStats& s) {
  j.at("mean").get_to(s.mean);
  j.at("std").get_to(s.std);
  j.at("n_images").get_to(s.n_images);
}

// Streaming pixel-weighted per-channel mean and population standard
// deviation.
class StatsAccumulator {
 public:
  void add(const Image& img) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < img.plane(); ++i) {
        const double v = img.data[c * img.plane() + i];
        sum_[c] += v;
        sq_[c] += v * v;
      }
    count_ += static_cast<double>(img.plane());
    ++images_;
  }

  DatasetStats finish() const {
    if (images_ == 0) throw DataError("cannot compute statistics of an empty image set");
    DatasetStats s;
    s.n_images = images_;
    for (std::size_t c = 0; c < 3; ++c) {
      s.mean[c] = sum_[c] / count_;
      s.std[c] = std::sqrt(std::max(0.0, sq_[c] / count_ - s.mean[c] * s.mean[c]));
    }
    return s;
  }

 private:
  std::array<double, 3> sum_{}, sq_{};
  double count_ = 0.0;
  std::size_t images_ = 0;
};

inline DatasetStats compute_stats(const std::vector<Image>& images) {
  StatsAccumulator acc;
  for (const auto& img : images) acc.add(img);
  return acc.finish();
}

// (value - mean_c) / std_c per channel.
template <typename T>
Tensor<T> normalize(const Image& img, const DatasetStats& stats) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (!(stats.std[c] > 0.0)) {
      throw StatisticsError("channel " + std::to_string(c) + " has non-positive std " +
                            std::to_string(stats.std[c]));
    }
  }
  Tensor<T> out({3, img.height, img.width});
  for (std::size_t c = 0; c < 3; ++c) {
    const double m = stats.mean[c], inv = 1.0 / stats.std[c];
    for (std::size_t i = 0; i < img.plane(); ++i) {
      out[c * img.plane() + i] =
          static_cast<T>((static_cast<double>(img.data[c * img.plane() + i]) - m) * inv);
    }
  }
  return out;
}

}  // namespace inod
