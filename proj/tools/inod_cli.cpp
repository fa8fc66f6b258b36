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

// inod: command-line front end for mask generation, label export, layer
// splitting, pretext training, evaluation and inspection.
//
// Exit codes: 0 success, 2 usage/config/format error, 3 runtime data error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inod/checkpoint.hpp"
#include "inod/config.hpp"
#include "inod/data.hpp"
#include "inod/image.hpp"
#include "inod/layer_split.hpp"
#include "inod/noise_mask.hpp"
#include "inod/pseudo_labels.hpp"
#include "inod/synthetic.hpp"
#include "inod/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace inod {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void write_json(const fs::path& path, const json& j) { detail::write_file(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

json box_json(const std::vector<BoxLabel>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back({b.x0, b.y0, b.x1, b.y1});
  return arr;
}

// Shared options: --config plus repeated --set overrides.
struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;

  void add_to(CLI::App* cmd, bool required) {
    auto* opt = cmd->add_option("--config", config, "TOML run configuration");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override a config key: section.key=value (repeatable)");
  }

  RunConfig load() const {
    auto cfg = load_run_config(config.empty() ? std::nullopt : std::optional<fs::path>(config), sets);
    cfg.validate();
    return cfg;
  }
};

// Granularity recorded in a mask file name (..._g8_...), if any.
std::optional<std::size_t> granularity_from_name(const fs::path& p) {
  static const std::regex re("_g([0-9]+)(_|$)");
  std::smatch m;
  const std::string stem = p.stem().string();
  if (std::regex_search(stem, m, re)) return std::stoul(m[1].str());
  return std::nullopt;
}

// ---- mask-gen ------------------------------------------------------------------

int cmd_mask_gen(const ConfigArgs& ca, std::size_t count, const fs::path& out_dir) {
  const RunConfig run = ca.load();
  const MaskGenConfig& base = run.pretext.mask;
  if (count == 0) {
    std::cout << "generated 0 masks\n";
    return kExitOk;
  }
  ensure_dir(out_dir);
  const auto [lo, hi] = detail::count_window(base.grid_h() * base.grid_w(), base.target_fraction,
                                             base.tolerance);
  json report = {{"crop", {base.crop_h, base.crop_w}},
                 {"granularity", base.granularity.stride},
                 {"grid", {base.grid_h(), base.grid_w()}},
                 {"target_fraction", base.target_fraction},
                 {"tolerance", base.tolerance},
                 {"count_window", {lo, hi}},
                 {"masks", json::array()}};
  for (std::size_t i = 0; i < count; ++i) {
    MaskGenConfig cfg = base;
    cfg.seed = derive_seed(base.seed, i);
    const NoiseMask mask = gen_noise_mask(cfg);
    char name[128];
    std::snprintf(name, sizeof(name), "mask_%05zu_c%zux%zu_g%zu_seed%llu", i, cfg.crop_h, cfg.crop_w,
                  cfg.granularity.stride, static_cast<unsigned long long>(cfg.seed));
    write_mask_pgm(out_dir / (std::string(name) + ".pgm"), mask.grid);
    const double frac = mask_fraction(mask);
    const json entry = {{"file", std::string(name) + ".pgm"},
                        {"index", i},
                        {"seed", cfg.seed},
                        {"cells", count_ones(mask.grid)},
                        {"fraction", frac},
                        {"within_window", frac >= base.target_fraction - base.tolerance - 1e-12 &&
                                              frac <= base.target_fraction + 1e-12}};
    json sidecar = entry;
    sidecar["crop"] = {cfg.crop_h, cfg.crop_w};
    sidecar["granularity"] = cfg.granularity.stride;
    sidecar["grid"] = {cfg.grid_h(), cfg.grid_w()};
    sidecar["target_fraction"] = cfg.target_fraction;
    sidecar["tolerance"] = cfg.tolerance;
    write_json(out_dir / (std::string(name) + ".json"), sidecar);
    report["masks"].push_back(entry);
    std::printf("%s fraction %.6f\n", name, frac);
  }
  write_json(out_dir / "report.json", report);
  return kExitOk;
}

// ---- labels-gen ----------------------------------------------------------------

int cmd_labels_gen(const fs::path& mask_path, const std::string& task, const fs::path& out,
                   std::optional<std::size_t> granularity, const std::string& size,
                   const std::string& rule) {
  const BinaryGrid mask = read_mask_pgm(mask_path);
  if (!granularity) granularity = granularity_from_name(mask_path);
  if (granularity && *granularity == 0) throw ConfigError("granularity must be positive");
  if (!out.parent_path().empty()) ensure_dir(out.parent_path());

  if (task == "detect") {
    const auto boxes = boxes_from_mask(mask);
    json j = {{"boxes", box_json(boxes)}, {"grid", {mask.height(), mask.width()}}};
    if (granularity) {
      j["granularity"] = *granularity;
      j["crop"] = {mask.height() * *granularity, mask.width() * *granularity};
      j["pixel_boxes"] = box_json(to_pixel_boxes(boxes, *granularity));
    } else {
      j["granularity"] = nullptr;
    }
    write_json(out, j);
    std::printf("%zu boxes\n", boxes.size());
  } else if (task == "semantic") {
    std::size_t h = mask.height(), w = mask.width();
    if (!size.empty()) {
      static const std::regex re("([0-9]+)x([0-9]+)");
      std::smatch m;
      if (!std::regex_match(size, m, re)) throw ConfigError("--size must look like HxW, got " + size);
      h = std::stoul(m[1].str());
      w = std::stoul(m[2].str());
    }
    write_mask_pgm(out, semantic_from_mask(mask, h, w));
    std::printf("semantic %zux%zu\n", h, w);
  } else {
    const InstanceRule r = rule == "component" ? InstanceRule::kComponent : InstanceRule::kBoxInterior;
    const auto inst = instances_from_mask(mask, r);
    write_pgm16(out, inst.ids);
    fs::path side = out;
    side.replace_extension(".json");
    json j = {{"boxes", box_json(inst.boxes)}, {"rule", rule}, {"grid", {mask.height(), mask.width()}}};
    if (granularity) {
      j["granularity"] = *granularity;
      j["pixel_boxes"] = box_json(to_pixel_boxes(inst.boxes, *granularity));
    }
    write_json(side, j);
    std::printf("%zu instances\n", inst.boxes.size());
  }
  return kExitOk;
}

// ---- split ---------------------------------------------------------------------

int cmd_split(const ConfigArgs& ca, const fs::path& mask_path, const fs::path& out_dir,
              std::optional<std::size_t> granularity) {
  const RunConfig run = ca.load();
  const BinaryGrid mask = read_mask_pgm(mask_path);
  if (!granularity) granularity = granularity_from_name(mask_path);
  const std::size_t g = granularity.value_or(run.pretext.mask.granularity.stride);
  const auto& enc = run.pretext.encoder;
  const auto dims = enc.level_dims(mask.height() * g, mask.width() * g);
  SplitOptions opts;
  opts.enabled = enc.injection_sites();
  opts.raster = run.pretext.raster;
  Rng rng = make_rng(run.pretext.mask.seed, 0x5b17);
  const auto set = split_mask(mask, dims, rng, opts);

  ensure_dir(out_dir);
  json levels = json::array();
  const auto strides = enc.level_strides();
  for (std::size_t l = 0; l < set.levels(); ++l) {
    const std::string part = "part_l" + std::to_string(l) + ".pgm";
    const std::string layer = "layer_l" + std::to_string(l) + ".pgm";
    write_mask_pgm(out_dir / part, set.canonical_parts[l]);
    write_mask_pgm(out_dir / layer, set.layer_grids[l]);
    levels.push_back(json{{"level", l},
                      {"stride", strides[l]},
                      {"dims", {dims[l].h, dims[l].w}},
                      {"inject", static_cast<bool>(opts.enabled[l])},
                      {"canonical_cells", count_ones(set.canonical_parts[l])},
                      {"layer_cells", count_ones(set.layer_grids[l])},
                      {"canonical_file", part},
                      {"layer_file", layer}});
  }
  json j = {{"mask", mask_path.filename().string()},
            {"granularity", g},
            {"grid", {mask.height(), mask.width()}},
            {"levels", levels},
            {"component_level", set.component_level}};
  write_json(out_dir / "split.json", j);
  std::printf("%zu components over %zu levels\n", set.component_level.size(), set.levels());
  return kExitOk;
}

// ---- pretrain / eval -----------------------------------------------------------

DatasetStats resolve_stats(const RunConfig& run, bool write_cache) {
  if (!run.paths.stats_file.empty() && fs::exists(run.paths.stats_file)) {
    try {
      return json::parse(detail::read_file(run.paths.stats_file)).get<DatasetStats>();
    } catch (const json::exception& e) {
      throw FormatError("bad statistics file " + run.paths.stats_file.string() + ": " + e.what());
    }
  }
  const DatasetStats s = stats_for_dir(run.paths.source_dir, log_line);
  if (write_cache) {
    ensure_dir(run.paths.out_dir);
    write_json(run.paths.out_dir / "stats.json", s);
  }
  return s;
}

PretextData load_data(const RunConfig& run, bool write_cache) {
  if (run.paths.source_dir.empty()) throw ConfigError("key 'paths.source_dir' is not set");
  if (run.paths.noise_dir.empty()) throw ConfigError("key 'paths.noise_dir' is not set");
  DatasetPairing pairing{run.paths.source_dir, run.paths.noise_dir, resolve_stats(run, write_cache)};
  return load_pretext_data(pairing, log_line);
}

template <typename T>
void run_pretrain(const RunConfig& run, const PretextData& data) {
  const fs::path ckpt = run.paths.out_dir / "checkpoint.inod";
  TrainOptions opts;
  opts.log = log_line;
  const auto result = train_pretext<T>(run.pretext, data, opts);
  save_checkpoint(ckpt, result.network);
  detail::write_file(run.paths.out_dir / "metrics.csv", metrics_csv(result.metrics));
  detail::write_file(run.paths.out_dir / "config.toml", config_to_toml(run) + "\n");
  std::printf("wrote %s\n", ckpt.string().c_str());
}

int cmd_pretrain(const ConfigArgs& ca) {
  const RunConfig run = ca.load();
  ensure_dir(run.paths.out_dir);
  const PretextData data = load_data(run, true);
  if (run.pretext.train.precision == Precision::kDouble) {
    run_pretrain<double>(run, data);
  } else {
    run_pretrain<float>(run, data);
  }
  return kExitOk;
}

template <typename T>
EvalReport run_eval(const RunConfig& run, const PretextData& data, const std::string& checkpoint,
                    bool oracle, std::size_t n) {
  if (oracle) return eval_oracle<T>(run.pretext, data, n);
  return eval_pretext(load_checkpoint<T>(checkpoint, run.pretext.encoder), run.pretext, data, n);
}

int cmd_eval(const ConfigArgs& ca, const std::string& checkpoint, bool oracle,
             std::optional<std::size_t> samples, const std::string& out) {
  const RunConfig run = ca.load();
  if (!oracle && checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --oracle");
  const PretextData data = load_data(run, false);
  const std::size_t n = samples.value_or(run.pretext.train.eval_samples);
  const EvalReport rep = run.pretext.train.precision == Precision::kDouble
                             ? run_eval<double>(run, data, checkpoint, oracle, n)
                             : run_eval<float>(run, data, checkpoint, oracle, n);
  json per = json::array();
  for (const auto& s : rep.samples) {
    per.push_back(json{{"index", s.index}, {"iou", s.iou}, {"loss", s.loss}, {"mask_fraction", s.mask_fraction}});
  }
  const json j = {{"predictor", oracle ? "oracle" : "checkpoint"},
                  {"samples", n},
                  {"mean_iou", rep.mean_iou},
                  {"mean_loss", rep.mean_loss},
                  {"per_sample", per}};
  if (!out.empty()) write_json(out, j);
  std::printf("mean_iou %.6f mean_loss %.6f over %zu episodes\n", rep.mean_iou, rep.mean_loss, n);
  return kExitOk;
}

// ---- stats ---------------------------------------------------------------------

int cmd_stats(const fs::path& dir, const std::string& out) {
  const json j = stats_for_dir(dir, log_line);
  if (!out.empty()) write_json(out, j);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

// ---- inject-demo ---------------------------------------------------------------

template <typename T>
json level_summary(const Tensor<T>& t, const BinaryGrid& layer) {
  const std::size_t c = t.shape()[0], hw = t.shape()[1] * t.shape()[2];
  double sum = 0, sq = 0, in_sum = 0, out_sum = 0;
  std::size_t in_n = 0, out_n = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < hw; ++i) {
      const double v = t[ch * hw + i];
      sum += v;
      sq += v * v;
      if (layer.data()[i]) {
        in_sum += v;
        ++in_n;
      } else {
        out_sum += v;
        ++out_n;
      }
    }
  const double n = static_cast<double>(c * hw), mean = sum / n;
  json j = {{"shape", t.shape()},
            {"mean", mean},
            {"std", std::sqrt(std::max(0.0, sq / n - mean * mean))},
            {"masked_cells", count_ones(layer)}};
  j["masked_mean"] = in_n ? json(in_sum / static_cast<double>(in_n)) : json(nullptr);
  j["unmasked_mean"] = out_n ? json(out_sum / static_cast<double>(out_n)) : json(nullptr);
  return j;
}

int cmd_inject_demo(const ConfigArgs& ca, const fs::path& source, const fs::path& noise,
                    const fs::path& out_dir, const std::string& checkpoint) {
  const RunConfig run = ca.load();
  const auto& pc = run.pretext;
  const std::size_t crop = pc.train.crop;
  const Image src = center_crop(read_image(source), crop, crop);
  const Image nse = center_crop(read_image(noise), crop, crop);
  const DatasetStats stats = !run.paths.stats_file.empty() && fs::exists(run.paths.stats_file)
                                 ? resolve_stats(run, false)
                                 : compute_stats({src});
  const Network<double> net = checkpoint.empty() ? Network<double>(pc.encoder)
                                                 : load_checkpoint<double>(checkpoint, pc.encoder);
  const NoiseMask mask = gen_noise_mask(pc.mask_for_crop());
  SplitOptions opts;
  opts.enabled = pc.encoder.injection_sites();
  opts.raster = pc.raster;
  Rng rng = make_rng(pc.mask.seed, 0x5b17);
  const auto layers = split_mask(mask, pc.encoder.level_dims(crop, crop), rng, opts);

  const auto src_t = normalize<double>(src, stats);
  const auto noise_pyr = encode_plain(normalize<double>(nse, stats), net);
  const auto plain = encode_plain(src_t, net);
  const auto composite = encode_with_injection(src_t, noise_pyr, layers, net);

  ensure_dir(out_dir);
  json levels = json::array();
  for (std::size_t l = 0; l < composite.levels.size(); ++l) {
    json j = level_summary(composite.levels[l], layers.layer_grids[l]);
    j["level"] = l;
    j["stride"] = composite.strides[l];
    j["source"] = level_summary(plain.levels[l], layers.layer_grids[l]);
    j["noise"] = level_summary(noise_pyr.levels[l], layers.layer_grids[l]);
    levels.push_back(j);
  }
  write_json(out_dir / "inject_summary.json",
             {{"crop", crop},
              {"granularity", mask.granularity.stride},
              {"mask_fraction", mask_fraction(mask)},
              {"component_level", layers.component_level},
              {"levels", levels}});
  write_mask_pgm(out_dir / "mask.pgm", mask.grid);

  // Source crop with noise cells tinted red.
  Image overlay = src;
  const std::size_t g = mask.granularity.stride;
  for (std::size_t y = 0; y < crop; ++y)
    for (std::size_t x = 0; x < crop; ++x) {
      if (!mask.grid(y / g, x / g)) continue;
      overlay.at(0, y, x) = 0.5f * overlay.at(0, y, x) + 0.5f;
      overlay.at(1, y, x) *= 0.5f;
      overlay.at(2, y, x) *= 0.5f;
    }
  write_png(out_dir / "overlay.png", overlay);
  std::printf("wrote %s\n", (out_dir / "inject_summary.json").string().c_str());
  return kExitOk;
}

// ---- synth ---------------------------------------------------------------------

int cmd_synth(const std::string& kind, std::size_t count, std::uint64_t seed, std::size_t size,
              const fs::path& out_dir) {
  TextureParams p;
  p.size = size;
  ensure_dir(out_dir);
  write_texture_dataset(out_dir, kind == "stripes" ? TextureKind::kStripes : TextureKind::kCheckerboard,
                        count, seed, p);
  std::printf("wrote %zu %s textures\n", count, kind.c_str());
  return kExitOk;
}

std::string config_footer() {
  std::string s = "\nConfiguration keys (TOML [section] key = value, or --set section.key=value):\n";
  for (const auto& d : config_key_docs()) {
    char line[256];
    std::snprintf(line, sizeof(line), "  %-24s %-22s %s\n", d.key.c_str(), d.default_value.c_str(),
                  d.help.c_str());
    s += line;
  }
  s += "\nExit codes: 0 success, 2 usage/config/format error, 3 data error.\n";
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"inod: injected-noise discriminator pretraining toolkit"};
  app.require_subcommand(1);
  app.footer(config_footer());

  ConfigArgs mask_cfg, split_cfg, train_cfg, eval_cfg, demo_cfg;
  std::size_t count = 0;
  std::string out_dir, mask_path, task = "detect", out, size, rule = "component", checkpoint, dir,
                       source, noise, kind = "stripes", eval_out, stats_out;
  std::optional<std::size_t> granularity, samples;
  bool oracle = false;
  std::uint64_t seed = 0;
  std::size_t tex_size = 96;

  auto* mg = app.add_subcommand("mask-gen", "generate noise masks as PGM files with JSON sidecars");
  mask_cfg.add_to(mg, false);
  mg->add_option("--count", count, "number of masks")->required();
  mg->add_option("--out-dir", out_dir, "output directory")->required();

  auto* lg = app.add_subcommand("labels-gen", "derive pseudo labels from a mask PGM");
  lg->add_option("--mask", mask_path, "binary mask PGM")->required();
  lg->add_option("--task", task, "detect, semantic or instance")
      ->check(CLI::IsMember({"detect", "semantic", "instance"}));
  lg->add_option("--out", out, "output file (JSON for detect, PGM otherwise)")->required();
  lg->add_option("--granularity", granularity, "mask stride in pixels (default: from file name)");
  lg->add_option("--size", size, "semantic output size HxW (default: mask size)");
  lg->add_option("--rule", rule, "instance rule: component or box-interior")
      ->check(CLI::IsMember({"component", "box-interior"}));

  auto* sp = app.add_subcommand("split", "assign mask components to injection levels");
  split_cfg.add_to(sp, false);
  sp->add_option("--mask", mask_path, "binary mask PGM")->required();
  sp->add_option("--out-dir", out_dir, "output directory")->required();
  sp->add_option("--granularity", granularity, "mask stride in pixels (default: from file name)");

  auto* pt = app.add_subcommand("pretrain", "train the pretext discriminator");
  train_cfg.add_to(pt, true);

  auto* ev = app.add_subcommand("eval", "pretext IoU on fresh injection episodes");
  eval_cfg.add_to(ev, true);
  ev->add_option("--checkpoint", checkpoint, "checkpoint written by pretrain");
  ev->add_flag("--oracle", oracle, "score the true mask as the prediction (reference run)");
  ev->add_option("--samples", samples, "episodes to evaluate (default: train.eval_samples)");
  ev->add_option("--out", eval_out, "write the JSON report here");

  auto* st = app.add_subcommand("stats", "per-channel statistics of an image directory");
  st->add_option("--dir", dir, "image directory")->required();
  st->add_option("--out", stats_out, "write the JSON here");

  auto* dm = app.add_subcommand("inject-demo", "inject one noise image into one source image");
  demo_cfg.add_to(dm, false);
  dm->add_option("--source", source, "source image")->required();
  dm->add_option("--noise", noise, "noise image")->required();
  dm->add_option("--out-dir", out_dir, "output directory")->required();
  dm->add_option("--checkpoint", checkpoint, "weights (default: freshly initialized)");

  auto* sy = app.add_subcommand("synth", "write a procedural texture dataset");
  sy->add_option("--kind", kind, "stripes or checkerboard")
      ->check(CLI::IsMember({"stripes", "checkerboard"}));
  sy->add_option("--count", count, "number of images")->required();
  sy->add_option("--seed", seed, "generator seed");
  sy->add_option("--size", tex_size, "image side in pixels")->check(CLI::Range(8, 4096));
  sy->add_option("--out-dir", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*mg) return cmd_mask_gen(mask_cfg, count, out_dir);
    if (*lg) return cmd_labels_gen(mask_path, task, out, granularity, size, rule);
    if (*sp) return cmd_split(split_cfg, mask_path, out_dir, granularity);
    if (*pt) return cmd_pretrain(train_cfg);
    if (*ev) return cmd_eval(eval_cfg, checkpoint, oracle, samples, eval_out);
    if (*st) return cmd_stats(dir, stats_out);
    if (*dm) return cmd_inject_demo(demo_cfg, source, noise, out_dir, checkpoint);
    if (*sy) return cmd_synth(kind, count, seed, tex_size, out_dir);
  } catch (const DataError& e) {
    std::cerr << "inod " << name << ": data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "inod " << name << ": error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "inod " << name << ": data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "inod " << name << ": unexpected error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace inod

int main(int argc, char** argv) { return inod::run(argc, argv); }
