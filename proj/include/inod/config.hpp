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

// RunConfig: one TOML file drives every subcommand. Keys are strict; an
// unknown section or key is an error naming it. `key=value` overrides use
// TOML value syntax and replace the file value.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "inod/errors.hpp"
#include "inod/train.hpp"

namespace inod {

struct RunPaths {
  std::filesystem::path source_dir;
  std::filesystem::path noise_dir;
  std::filesystem::path out_dir = "run";
  // Optional precomputed statistics JSON; computed from source_dir if empty.
  std::filesystem::path stats_file;
};

struct RunConfig {
  PretextConfig pretext{};
  RunPaths paths{};

  void validate() const;
};

// Documentation row for --help: key, default, meaning.
struct KeyDoc {
  std::string key;
  std::string default_value;
  std::string help;
};

namespace detail {

inline std::string node_type_name(const toml::node& n) {
  std::ostringstream os;
  os << n.type();
  return os.str();
}

[[noreturn]] inline void bad_type(const std::string& key, const toml::node& n, const char* want) {
  throw ConfigError("key '" + key + "': expected " + want + ", got " + node_type_name(n));
}

inline std::uint64_t as_uint(const std::string& key, const toml::node& n) {
  const auto v = n.value<std::int64_t>();
  if (!n.is_integer() || !v) bad_type(key, n, "integer");
  if (*v < 0) throw ConfigError("key '" + key + "': must be non-negative, got " + std::to_string(*v));
  return static_cast<std::uint64_t>(*v);
}

inline double as_real(const std::string& key, const toml::node& n) {
  if (!n.is_number()) bad_type(key, n, "number");
  return *n.value<double>();
}

inline bool as_bool(const std::string& key, const toml::node& n) {
  if (!n.is_boolean()) bad_type(key, n, "boolean");
  return *n.value<bool>();
}

inline std::string as_string(const std::string& key, const toml::node& n) {
  if (!n.is_string()) bad_type(key, n, "string");
  return *n.value<std::string>();
}

template <typename E>
E as_enum(const std::string& key, const toml::node& n,
          const std::vector<std::pair<std::string, E>>& options) {
  const std::string s = as_string(key, n);
  std::string names;
  for (const auto& [name, value] : options) {
    if (name == s) return value;
    names += (names.empty() ? "" : ", ") + name;
  }
  throw ConfigError("key '" + key + "': '" + s + "' is not one of " + names);
}

// Encoder stages: array of tables {channels, kernel, stride, inject}.
inline std::vector<ConvSpec> as_stages(const std::string& key, const toml::node& n,
                                       bool allow_inject) {
  const auto* arr = n.as_array();
  if (!arr) bad_type(key, n, "array of tables");
  std::vector<ConvSpec> out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto* t = (*arr)[i].as_table();
    const std::string where = key + "[" + std::to_string(i) + "]";
    if (!t) bad_type(where, (*arr)[i], "table");
    ConvSpec c;
    c.inject = allow_inject;
    for (const auto& [k, v] : *t) {
      const std::string sub = where + "." + std::string(k.str());
      if (k == "channels") {
        c.out_channels = as_uint(sub, v);
      } else if (k == "kernel") {
        c.kernel = as_uint(sub, v);
      } else if (k == "stride") {
        c.stride = as_uint(sub, v);
      } else if (k == "inject" && allow_inject) {
        c.inject = as_bool(sub, v);
      } else {
        throw ConfigError("unknown key '" + sub + "'");
      }
    }
    out.push_back(c);
  }
  return out;
}

inline toml::array stages_to_toml(const std::vector<ConvSpec>& stages, bool with_inject) {
  toml::array arr;
  for (const auto& c : stages) {
    toml::table t{{"channels", static_cast<std::int64_t>(c.out_channels)},
                  {"kernel", static_cast<std::int64_t>(c.kernel)},
                  {"stride", static_cast<std::int64_t>(c.stride)}};
    if (with_inject) t.insert("inject", c.inject);
    arr.push_back(std::move(t));
  }
  return arr;
}

inline std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const toml::node&,
                                  const std::filesystem::path& base)>;

struct KeySpec {
  std::string key;
  Setter set;
  std::string help;
};

inline const std::vector<KeySpec>& key_specs() {
  using P = std::filesystem::path;
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    auto uint_key = [&s](std::string key, auto member, std::string help) {
      s.push_back({std::move(key),
                   [member](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                     member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(as_uint(k, n));
                   },
                   std::move(help)});
    };
    auto real_key = [&s](std::string key, auto member, std::string help) {
      s.push_back({std::move(key),
                   [member](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                     member(c) = as_real(k, n);
                   },
                   std::move(help)});
    };
    auto path_key = [&s](std::string key, auto member, std::string help) {
      s.push_back({std::move(key),
                   [member](RunConfig& c, const std::string& k, const toml::node& n, const P& base) {
                     member(c) = resolve(base, as_string(k, n));
                   },
                   std::move(help)});
    };
    // [paths]
    path_key("paths.source_dir", [](RunConfig& c) -> P& { return c.paths.source_dir; },
             "directory of source-domain images");
    path_key("paths.noise_dir", [](RunConfig& c) -> P& { return c.paths.noise_dir; },
             "directory of noise-domain images");
    path_key("paths.out_dir", [](RunConfig& c) -> P& { return c.paths.out_dir; },
             "output directory for checkpoints, metrics and statistics");
    path_key("paths.stats_file", [](RunConfig& c) -> P& { return c.paths.stats_file; },
             "cached source statistics JSON (computed when empty)");
    // [mask]
    uint_key("mask.crop_h", [](RunConfig& c) -> std::size_t& { return c.pretext.mask.crop_h; },
             "crop height for mask-gen (pretrain uses train.crop)");
    uint_key("mask.crop_w", [](RunConfig& c) -> std::size_t& { return c.pretext.mask.crop_w; },
             "crop width for mask-gen (pretrain uses train.crop)");
    uint_key("mask.stride",
             [](RunConfig& c) -> std::size_t& { return c.pretext.mask.granularity.stride; },
             "mask granularity in pixels: 4, 8, 16 or 32");
    real_key("mask.target_fraction",
             [](RunConfig& c) -> double& { return c.pretext.mask.target_fraction; },
             "upper end of the noise-cell fraction window");
    real_key("mask.tolerance", [](RunConfig& c) -> double& { return c.pretext.mask.tolerance; },
             "width of the fraction window below target_fraction");
    uint_key("mask.seed", [](RunConfig& c) -> std::uint64_t& { return c.pretext.mask.seed; },
             "seed for mask-gen and split");
    s.push_back({"mask.scale_mode",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.mask.scale_mode = as_enum<ScaleMode>(
                       k, n, {{"interval", ScaleMode::kInterval}, {"discrete", ScaleMode::kDiscrete}});
                 },
                 "patch extent rule: interval (uniform in [1/6, 2/3]) or discrete ({1/6, 2/3})"});
    // [split]
    s.push_back({"split.raster",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.raster = as_enum<RasterMode>(
                       k, n, {{"coverage", RasterMode::kCoverage}, {"center", RasterMode::kCenter}});
                 },
                 "coarse-level rasterization: coverage or center"});
    // [encoder]
    s.push_back({"encoder.stem",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.encoder.stem = as_stages(k, n, false);
                 },
                 "stages before the first level: [{channels, kernel, stride}]"});
    s.push_back({"encoder.levels",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.encoder.levels = as_stages(k, n, true);
                 },
                 "pyramid levels: [{channels, kernel, stride, inject}]"});
    uint_key("encoder.neck_channels",
             [](RunConfig& c) -> std::size_t& { return c.pretext.encoder.neck_channels; },
             "channels of the fused neck output");
    uint_key("encoder.seed", [](RunConfig& c) -> std::uint64_t& { return c.pretext.encoder.seed; },
             "weight initialization seed");
    // [train]
    uint_key("train.epochs", [](RunConfig& c) -> std::size_t& { return c.pretext.train.epochs; },
             "number of epochs");
    uint_key("train.batch_size",
             [](RunConfig& c) -> std::size_t& { return c.pretext.train.batch_size; },
             "episodes per optimizer step");
    uint_key("train.reference_batch_size",
             [](RunConfig& c) -> std::size_t& { return c.pretext.train.reference_batch_size; },
             "reference batch size, recorded only");
    uint_key("train.steps_per_epoch",
             [](RunConfig& c) -> std::size_t& { return c.pretext.train.steps_per_epoch; },
             "steps per epoch; 0 = ceil(#source images / batch_size)");
    real_key("train.base_lr", [](RunConfig& c) -> double& { return c.pretext.train.base_lr; },
             "initial learning rate");
    real_key("train.momentum", [](RunConfig& c) -> double& { return c.pretext.train.momentum; },
             "SGD momentum");
    real_key("train.weight_decay",
             [](RunConfig& c) -> double& { return c.pretext.train.weight_decay; },
             "SGD weight decay");
    real_key("train.lr_decay", [](RunConfig& c) -> double& { return c.pretext.train.lr_decay; },
             "learning-rate factor applied at each milestone");
    s.push_back({"train.milestones",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   const auto* arr = n.as_array();
                   if (!arr) bad_type(k, n, "array of numbers");
                   c.pretext.train.milestones.clear();
                   for (std::size_t i = 0; i < arr->size(); ++i) {
                     c.pretext.train.milestones.push_back(
                         as_real(k + "[" + std::to_string(i) + "]", (*arr)[i]));
                   }
                 },
                 "learning-rate milestones as fractions of the epoch budget"});
    uint_key("train.crop", [](RunConfig& c) -> std::size_t& { return c.pretext.train.crop; },
             "square training crop in pixels");
    uint_key("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.pretext.train.seed; },
             "seed of the episode stream");
    real_key("train.focal_alpha",
             [](RunConfig& c) -> double& { return c.pretext.train.focal.alpha; },
             "focal loss positive-class weight");
    real_key("train.focal_gamma",
             [](RunConfig& c) -> double& { return c.pretext.train.focal.gamma; },
             "focal loss focusing exponent");
    s.push_back({"train.label_resolution",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.train.label_resolution = as_enum<LabelResolution>(
                       k, n, {{"canonical", LabelResolution::kCanonical}, {"crop", LabelResolution::kCrop}});
                 },
                 "discriminator output resolution: canonical (mask grid) or crop"});
    s.push_back({"train.precision",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.train.precision = as_enum<Precision>(
                       k, n, {{"single", Precision::kSingle}, {"double", Precision::kDouble}});
                 },
                 "scalar type: single or double"});
    s.push_back({"train.self_pair",
                 [](RunConfig& c, const std::string& k, const toml::node& n, const P&) {
                   c.pretext.train.self_pair = as_bool(k, n);
                 },
                 "use each source crop as its own noise image"});
    uint_key("train.eval_samples",
             [](RunConfig& c) -> std::size_t& { return c.pretext.train.eval_samples; },
             "episodes evaluated by eval");
    // [augment]
    auto aug = [&](const char* name, double AugmentationConfig::*m, const char* help) {
      real_key(std::string("augment.") + name,
               [m](RunConfig& c) -> double& { return c.pretext.augment.*m; }, help);
    };
    aug("hflip_prob", &AugmentationConfig::hflip_prob, "horizontal flip probability");
    aug("blur_prob", &AugmentationConfig::blur_prob, "gaussian blur probability");
    aug("blur_sigma_min", &AugmentationConfig::blur_sigma_min, "lower blur sigma (pixels)");
    aug("blur_sigma_max", &AugmentationConfig::blur_sigma_max, "upper blur sigma (pixels)");
    aug("grayscale_prob", &AugmentationConfig::grayscale_prob, "grayscale probability");
    aug("jitter_prob", &AugmentationConfig::jitter_prob, "color jitter probability");
    aug("brightness", &AugmentationConfig::brightness, "jitter brightness strength");
    aug("contrast", &AugmentationConfig::contrast, "jitter contrast strength");
    aug("saturation", &AugmentationConfig::saturation, "jitter saturation strength");
    aug("hue", &AugmentationConfig::hue, "jitter hue strength (<= 0.5)");
    return s;
  }();
  return specs;
}

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& k : key_specs())
    if (k.key == key) return &k;
  return nullptr;
}

// Current value of every key, rendered as TOML.
inline toml::table to_toml(const RunConfig& c) {
  const auto& p = c.pretext;
  auto i64 = [](std::uint64_t v) { return static_cast<std::int64_t>(v); };
  toml::array milestones;
  for (double m : p.train.milestones) milestones.push_back(m);
  return toml::table{
      {"paths", toml::table{{"source_dir", c.paths.source_dir.string()},
                            {"noise_dir", c.paths.noise_dir.string()},
                            {"out_dir", c.paths.out_dir.string()},
                            {"stats_file", c.paths.stats_file.string()}}},
      {"mask", toml::table{{"crop_h", i64(p.mask.crop_h)},
                           {"crop_w", i64(p.mask.crop_w)},
                           {"stride", i64(p.mask.granularity.stride)},
                           {"target_fraction", p.mask.target_fraction},
                           {"tolerance", p.mask.tolerance},
                           {"seed", i64(p.mask.seed)},
                           {"scale_mode", p.mask.scale_mode == ScaleMode::kInterval ? "interval" : "discrete"}}},
      {"split", toml::table{{"raster", p.raster == RasterMode::kCoverage ? "coverage" : "center"}}},
      {"encoder", toml::table{{"stem", stages_to_toml(p.encoder.stem, false)},
                              {"levels", stages_to_toml(p.encoder.levels, true)},
                              {"neck_channels", i64(p.encoder.neck_channels)},
                              {"seed", i64(p.encoder.seed)}}},
      {"train",
       toml::table{{"epochs", i64(p.train.epochs)},
                   {"batch_size", i64(p.train.batch_size)},
                   {"reference_batch_size", i64(p.train.reference_batch_size)},
                   {"steps_per_epoch", i64(p.train.steps_per_epoch)},
                   {"base_lr", p.train.base_lr},
                   {"momentum", p.train.momentum},
                   {"weight_decay", p.train.weight_decay},
                   {"lr_decay", p.train.lr_decay},
                   {"milestones", milestones},
                   {"crop", i64(p.train.crop)},
                   {"seed", i64(p.train.seed)},
                   {"focal_alpha", p.train.focal.alpha},
                   {"focal_gamma", p.train.focal.gamma},
                   {"label_resolution",
                    p.train.label_resolution == LabelResolution::kCanonical ? "canonical" : "crop"},
                   {"precision", p.train.precision == Precision::kSingle ? "single" : "double"},
                   {"self_pair", p.train.self_pair},
                   {"eval_samples", i64(p.train.eval_samples)}}},
      {"augment", toml::table{{"hflip_prob", p.augment.hflip_prob},
                              {"blur_prob", p.augment.blur_prob},
                              {"blur_sigma_min", p.augment.blur_sigma_min},
                              {"blur_sigma_max", p.augment.blur_sigma_max},
                              {"grayscale_prob", p.augment.grayscale_prob},
                              {"jitter_prob", p.augment.jitter_prob},
                              {"brightness", p.augment.brightness},
                              {"contrast", p.augment.contrast},
                              {"saturation", p.augment.saturation},
                              {"hue", p.augment.hue}}},
  };
}

}  // namespace detail

inline void RunConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("[") + section + "] " + e.what());
    }
  };
  wrap("mask", [&] { pretext.mask.validate(); });
  wrap("train", [&] { pretext.validate(); });
}

// Applies one table of settings; `base` resolves relative paths.
inline void apply_toml(RunConfig& cfg, const toml::table& root, const std::filesystem::path& base) {
  for (const auto& [section, node] : root) {
    const std::string sec(section.str());
    const auto* tbl = node.as_table();
    if (!tbl) throw ConfigError("unknown key '" + sec + "' (expected a [section])");
    for (const auto& [key, value] : *tbl) {
      const std::string full = sec + "." + std::string(key.str());
      const auto* spec = detail::find_key(full);
      if (!spec) throw ConfigError("unknown key '" + full + "'");
      spec->set(cfg, full, value, base);
    }
  }
}

// Parses an override of the form section.key=<TOML value>. Bare words that
// are not valid TOML values are taken as strings.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  const auto* spec = detail::find_key(key);
  if (!spec) throw ConfigError("unknown key '" + key + "'");
  toml::table parsed;
  try {
    parsed = toml::parse("v = " + text);
  } catch (const toml::parse_error&) {
    parsed = toml::table{{"v", text}};
  }
  spec->set(cfg, key, *parsed.get("v"), std::filesystem::path{});
}

inline RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                                 const std::vector<std::string>& overrides = {}) {
  RunConfig cfg;
  if (file) {
    toml::table root;
    try {
      root = toml::parse_file(file->string());
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << file->string() << ":" << e.source().begin.line << ":" << e.source().begin.column
         << ": " << e.description();
      throw ConfigError(os.str());
    }
    apply_toml(cfg, root, file->parent_path());
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

// Every key with its default, for --help.
inline std::vector<KeyDoc> config_key_docs() {
  const toml::table defaults = detail::to_toml(RunConfig{});
  std::vector<KeyDoc> out;
  for (const auto& spec : detail::key_specs()) {
    const auto* node = defaults.at_path(spec.key).node();
    std::ostringstream os;
    if (node) {
      node->visit([&os](const auto& v) {
        if constexpr (toml::is_string<decltype(v)>) {
          os << '"' << v.get() << '"';
        } else if constexpr (toml::is_floating_point<decltype(v)>) {
          os << detail::shortest(v.get());
        } else if constexpr (toml::is_array<decltype(v)>) {
          if (v.is_homogeneous(toml::node_type::floating_point)) {
            os << '[';
            for (std::size_t i = 0; i < v.size(); ++i) {
              os << (i ? ", " : "") << detail::shortest(*v[i].template value<double>());
            }
            os << ']';
          } else {
            os << toml::toml_formatter(v, toml::format_flags::none);
          }
        } else {
          os << v;
        }
      });
    }
    std::string d = os.str();
    std::replace(d.begin(), d.end(), '\n', ' ');
    if (d.size() > 48) d = d.substr(0, 45) + "...";
    out.push_back({spec.key, d, spec.help});
  }
  return out;
}

inline std::string config_to_toml(const RunConfig& cfg) {
  std::ostringstream os;
  os << toml::toml_formatter(detail::to_toml(cfg));
  return os.str();
}

}  // namespace inod
