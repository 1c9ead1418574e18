#include "cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "crackforge/cracksim/crack_spec.hpp"
#include "crackforge/embed/embed.hpp"
#include "crackforge/evalmetrics/metrics.hpp"
#include "crackforge/multiscale/fusion.hpp"
#include "crackforge/riesz/train.hpp"
#include "crackforge/volcore/io.hpp"
#include "crackforge/volcore/kernels.hpp"
#include "crackforge/volcore/rng.hpp"
#include "manifest.hpp"
#include "png.hpp"

namespace crackforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_verbosity = 1;

void info(const std::string& msg) {
  if (g_verbosity >= 1) std::cerr << "crackforge: " << msg << '\n';
}

void debug(const std::string& msg) {
  if (g_verbosity >= 2) std::cerr << "crackforge: " << msg << '\n';
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
  return buf;
}

int parse_axis(const std::string& s) {
  if (s == "x") return 0;
  if (s == "y") return 1;
  if (s == "z") return 2;
  throw ConfigError("axis must be x, y or z, got '" + s + "'");
}

void require(bool given, const char* flag, const char* command) {
  if (!given) throw ConfigError(std::string(command) + ": " + flag + " is required");
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw Error("cannot create directory " + p.string());
}

// Values for options not given on the command line come from the config file:
// section "<command>" (or "config"."<command>" in a manifest), keys are the long
// option names with '-' or '_'.
class ConfigFile {
 public:
  void load(const fs::path& p) {
    json j = read_json(p);
    root_ = j.contains("config") && j["config"].is_object() ? j["config"] : j;
  }

  [[nodiscard]] const json* section(const std::string& command) const {
    const auto it = root_.find(command);
    return it == root_.end() || !it->is_object() ? nullptr : &*it;
  }

  void fill(CLI::App* sub) const {
    const json* sec = section(sub->get_name());
    if (!sec) return;
    for (CLI::Option* opt : sub->get_options()) {
      if (opt->count() > 0 || opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      std::string alt = name;
      std::replace(alt.begin(), alt.end(), '-', '_');
      const json* v = sec->contains(name) ? &sec->at(name) : sec->contains(alt) ? &sec->at(alt) : nullptr;
      // Objects (inline crack spec, training config) are read by the commands.
      if (!v || v->is_null() || v->is_object()) continue;
      std::vector<std::string> parts;
      if (v->is_array()) {
        for (const auto& e : *v) parts.push_back(scalar(e, name));
      } else {
        parts.push_back(scalar(*v, name));
      }
      if (opt->get_type_size() == 0) {
        // Flag: only a true value switches it on.
        if (parts.size() == 1 && parts[0] == "true") opt->add_result(std::string("true"));
      } else if (!parts.empty()) {
        opt->add_result(parts);
      }
      opt->run_callback();
    }
  }

 private:
  static std::string scalar(const json& e, const std::string& key) {
    if (e.is_string()) return e.get<std::string>();
    if (e.is_boolean()) return e.get<bool>() ? "true" : "false";
    if (e.is_number_integer()) return std::to_string(e.get<std::int64_t>());
    if (e.is_number_unsigned()) return std::to_string(e.get<std::uint64_t>());
    if (e.is_number()) return e.dump();
    throw ConfigError("config key '" + key + "' must be a scalar or a list of scalars");
  }

  json root_ = json::object();
};

bool given(const CLI::Option* o) { return o && o->count() > 0; }

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string spec, out;
  std::uint64_t seed = 0;
  int count = 1;
  std::vector<int> widths;
  int cracks_per_image = 1;
  CLI::Option *o_spec{}, *o_seed{}, *o_count{}, *o_widths{}, *o_cpi{}, *o_out{};
};

int cmd_generate(const GenerateArgs& a, const ConfigFile& cfgfile) {
  require(given(a.o_out), "--out", "generate");
  cracksim::CrackSpec spec;
  const json* sec = cfgfile.section("generate");
  if (given(a.o_spec)) {
    spec = cracksim::CrackSpec::from_json(read_json(a.spec));
  } else if (sec && sec->contains("crack_spec")) {
    spec = cracksim::CrackSpec::from_json(sec->at("crack_spec"));
  } else {
    throw ConfigError("generate: --spec is required");
  }
  if (given(a.o_seed)) spec.seed = a.seed;
  if (given(a.o_count)) spec.count = a.count;
  if (given(a.o_widths)) {
    spec.widths = a.widths;
    spec.dilation_p.reset();
  }
  if (given(a.o_cpi)) spec.cracks_per_image = a.cracks_per_image;
  spec.validate();

  const fs::path out = a.out;
  ensure_dir(out);
  const auto plan = cracksim::plan_masks(spec);
  info("generate: " + std::to_string(plan.size()) + " masks into " + out.string());
  std::vector<cracksim::CrackRealization> res(plan.size());
  std::vector<std::string> errors(plan.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < plan.size(); ++i) {
    try {
      res[i] = cracksim::generate_crack(spec, plan[i].width, plan[i].seed);
      save_mask(res[i].mask, out / numbered("mask", i, ".raw"));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!errors[i].empty()) {
      throw Error("generate: mask " + std::to_string(i) + " (width " + std::to_string(plan[i].width) +
                  ", seed " + std::to_string(plan[i].seed) + "): " + errors[i]);
    }
  }
  Manifest m("generate", out);
  m.set_config({{"crack_spec", spec.to_json()}, {"out", a.out}});
  for (std::size_t i = 0; i < plan.size(); ++i) {
    json extra{{"index", i},
               {"width", plan[i].width},
               {"seed", plan[i].seed},
               {"attempts", res[i].attempts},
               {"clipped", res[i].clipped},
               {"foreground", count_foreground(res[i].mask)}};
    if (res[i].profile) extra["adaptive"] = true;
    m.add_artifact(out / numbered("mask", i, ".raw"), extra);
  }
  m.write(manifest_path_for(out));
  return kExitOk;
}

// ----------------------------------------------------------------- phantom

struct PhantomArgs {
  std::vector<std::int64_t> dims{64, 64, 64};
  std::uint64_t seed = 0;
  std::string out;
  CLI::Option* o_out{};
};

int cmd_phantom(const PhantomArgs& a) {
  require(given(a.o_out), "--out", "phantom");
  if (a.dims.size() != 3) throw ConfigError("phantom: --dims takes nx,ny,nz");
  const Dims d{a.dims[0], a.dims[1], a.dims[2]};
  const VoxelVolume v = embed::concrete_phantom(d, a.seed);
  save_volume(v, a.out);
  Manifest m("phantom", fs::path(a.out).parent_path());
  m.set_config({{"dims", a.dims}, {"seed", a.seed}, {"out", a.out}});
  m.add_artifact(a.out);
  m.write(manifest_path_for(a.out));
  return kExitOk;
}

// ------------------------------------------------------------------- embed

struct EmbedArgs {
  std::string background, masks_manifest, out;
  std::vector<std::string> masks;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  double pore_quantile = 0.02;
  CLI::Option *o_background{}, *o_out{};
};

int cmd_embed(const EmbedArgs& a) {
  require(given(a.o_out), "--out", "embed");
  std::vector<fs::path> masks(a.masks.begin(), a.masks.end());
  if (!a.masks_manifest.empty()) {
    const json man = read_json(a.masks_manifest);
    for (const auto& e : man.at("artifacts")) masks.push_back(resolve_artifact(a.masks_manifest, e));
  }
  if (masks.empty()) throw ConfigError("embed: no masks (use --mask or --masks)");
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw ConfigError("embed: --alpha must lie in [0, 1]");
  embed::PoreOptions po;
  po.quantile = a.pore_quantile;

  const fs::path out = a.out;
  ensure_dir(out);
  std::optional<VoxelVolume> bg;
  std::optional<embed::PoreGvd> bg_gvd;
  if (given(a.o_background)) {
    bg = load_volume(a.background);
    bg_gvd = embed::estimate_pore_gvd(*bg, po);
    info("embed: pore gray values mean " + std::to_string(bg_gvd->mean()));
  }
  std::vector<std::string> errors(masks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < masks.size(); ++i) {
    try {
      const BinaryMask mask = load_mask(masks[i]);
      VoxelVolume ct;
      embed::PoreGvd gvd;
      if (bg) {
        require_same_dims(bg->dims(), mask.dims(), "embed: background vs mask");
        ct = *bg;
        gvd = *bg_gvd;
      } else {
        ct = embed::concrete_phantom(mask.dims(), split_seed(a.seed, 2 * i));
        gvd = embed::estimate_pore_gvd(ct, po);
      }
      const VoxelVolume img = embed::embed_crack(ct, mask, gvd, split_seed(a.seed, 2 * i + 1), a.alpha);
      save_volume(img, out / numbered("image", i, ".raw"));
      save_mask(mask, out / numbered("mask", i, ".raw"));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!errors[i].empty()) throw Error("embed: " + masks[i].string() + ": " + errors[i]);
  }
  Manifest m("embed", out);
  json cfg{{"out", a.out}, {"seed", a.seed}, {"alpha", a.alpha}, {"pore_quantile", a.pore_quantile}};
  std::vector<std::string> mask_list;
  for (const auto& p : masks) mask_list.push_back(fs::absolute(p).lexically_normal().string());
  cfg["mask"] = mask_list;
  if (bg) {
    cfg["background"] = a.background;
    m.add_input("background", a.background);
  }
  m.set_config(cfg);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    m.add_input("mask", masks[i]);
    json extra{{"index", i}, {"embed_seed", split_seed(a.seed, 2 * i + 1)}};
    extra["mask"] = file_ref(out / numbered("mask", i, ".raw"));
    extra["mask"]["path"] = numbered("mask", i, ".raw");
    if (!bg) extra["phantom_seed"] = split_seed(a.seed, 2 * i);
    m.add_artifact(out / numbered("image", i, ".raw"), extra);
  }
  m.write(manifest_path_for(out));
  return kExitOk;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::vector<std::string> data, images, masks;
  std::string out, warm_start, train_config, class_weight, slice_axis = "y";
  std::vector<int> channels{1, 16, 16, 32, 1};
  int d = 3;
  int epochs = 20, batch_size = 8, decay_period = 5, slice_step = 1;
  double learning_rate = 1e-3, lr_decay = 0.5;
  bool augment = false, keep_empty = false;
  std::uint64_t seed = 0;
  CLI::Option *o_out{}, *o_channels{}, *o_d{}, *o_epochs{}, *o_batch{}, *o_lr{}, *o_decay{},
      *o_period{}, *o_cw{}, *o_augment{}, *o_seed{}, *o_tc{};
};

struct Pair {
  fs::path image, mask;
};

int cmd_train(const TrainArgs& a, const ConfigFile& cfgfile) {
  require(given(a.o_out), "--out", "train");
  std::vector<Pair> pairs;
  for (const auto& man_path : a.data) {
    const json man = read_json(man_path);
    for (const auto& e : man.at("artifacts")) {
      if (!e.contains("mask")) throw ConfigError(man_path + ": not an embed manifest (artifact without mask)");
      pairs.push_back({resolve_artifact(man_path, e), resolve_artifact(man_path, e.at("mask"))});
    }
  }
  if (a.images.size() != a.masks.size()) throw ConfigError("train: --image and --mask counts differ");
  for (std::size_t i = 0; i < a.images.size(); ++i) pairs.push_back({a.images[i], a.masks[i]});
  if (pairs.empty()) throw ConfigError("train: no training data (use --data or --image/--mask)");

  riesz::TrainConfig tc;
  const json* sec = cfgfile.section("train");
  if (given(a.o_tc)) {
    tc = riesz::TrainConfig::from_json(read_json(a.train_config));
  } else if (sec && sec->contains("train_config")) {
    tc = riesz::TrainConfig::from_json(sec->at("train_config"));
  }
  if (given(a.o_epochs)) tc.epochs = a.epochs;
  if (given(a.o_batch)) tc.batch_size = a.batch_size;
  if (given(a.o_lr)) tc.learning_rate = a.learning_rate;
  if (given(a.o_decay)) tc.lr_decay = a.lr_decay;
  if (given(a.o_period)) tc.decay_period = a.decay_period;
  if (given(a.o_augment)) tc.augment = a.augment;
  if (given(a.o_seed)) tc.seed = a.seed;
  if (given(a.o_cw)) {
    if (a.class_weight == "auto") {
      tc.class_weight.reset();
    } else {
      try {
        tc.class_weight = std::stod(a.class_weight);
      } catch (const std::exception&) {
        throw ConfigError("train: --class-weight must be a number or 'auto'");
      }
    }
  }
  tc.validate();

  std::optional<riesz::RieszNetwork> net;
  json warm = nullptr;
  if (!a.warm_start.empty()) {
    auto loaded = riesz::load_model(a.warm_start);
    const auto& mc = loaded.net.config();
    if ((given(a.o_channels) && mc.channels != a.channels) || (given(a.o_d) && mc.d != a.d)) {
      throw ConfigError("train: --channels/--d disagree with the warm-start model");
    }
    net = std::move(loaded.net);
    warm = file_ref(fs::absolute(a.warm_start).lexically_normal());
  } else {
    const riesz::NetworkConfig nc{a.channels, a.d};
    nc.validate();
    net = riesz::RieszNetwork::initialized(nc, split_seed(tc.seed, 0xA11CE));
  }
  const int d = net->config().d;
  const int axis = parse_axis(a.slice_axis);
  if (a.slice_step < 1) throw ConfigError("train: --slice-step must be >= 1");

  std::vector<riesz::TrainSample> samples;
  for (const auto& p : pairs) {
    VoxelVolume img = load_volume(p.image);
    BinaryMask mask = load_mask(p.mask);
    require_same_dims(img.dims(), mask.dims(), "train: image vs mask");
    const int vd = img.dims().dimensionality();
    if (vd == d) {
      samples.push_back({std::move(img), std::move(mask)});
    } else if (d == 2 && vd == 3) {
      for (std::int64_t s = 0; s < img.dims()[axis]; s += a.slice_step) {
        BinaryMask ms = extract_slice(mask, axis, s);
        if (!a.keep_empty && count_foreground(ms) == 0) continue;
        samples.push_back({extract_slice(img, axis, s), std::move(ms)});
      }
    } else {
      throw ConfigError("train: a d=3 model needs 3D volumes, got " + p.image.string());
    }
  }
  if (samples.empty()) throw ConfigError("train: every slice is empty; use --keep-empty or other data");
  info("train: " + std::to_string(samples.size()) + " samples, " +
       std::to_string(riesz::count_params(net->config())) + " parameters");

  const riesz::TrainResult r = riesz::train(*net, samples, tc, [](const riesz::EpochLog& l) {
    info("epoch " + std::to_string(l.epoch) + "  loss " + std::to_string(l.loss) + "  lr " +
         std::to_string(l.learning_rate));
  });

  json data_refs = json::array();
  for (const auto& p : pairs) {
    data_refs.push_back({{"image", file_ref(fs::absolute(p.image).lexically_normal())},
                         {"mask", file_ref(fs::absolute(p.mask).lexically_normal())}});
  }
  json meta{{"train_config", tc.to_json()},
            {"class_weight", r.class_weight},
            {"loss_history", r.loss_history},
            {"samples", samples.size()},
            {"warm_start", warm}};
  riesz::save_model(*net, a.out, meta);

  Manifest m("train", fs::path(a.out).parent_path());
  json cfg{{"out", a.out},
           {"channels", net->config().channels},
           {"d", d},
           {"train_config", tc.to_json()},
           {"slice_axis", a.slice_axis},
           {"slice_step", a.slice_step},
           {"keep_empty", a.keep_empty}};
  if (!a.data.empty()) cfg["data"] = a.data;
  if (!a.images.empty()) {
    cfg["image"] = a.images;
    cfg["mask"] = a.masks;
  }
  if (!a.warm_start.empty()) cfg["warm_start"] = a.warm_start;
  m.set_config(cfg);
  for (const auto& p : pairs) {
    m.add_input("image", p.image);
    m.add_input("mask", p.mask);
  }
  if (!a.warm_start.empty()) m.add_input("warm_start", a.warm_start);
  m.add_artifact(a.out, {{"kind", "model"}});
  m.extra()["loss_history"] = r.loss_history;
  m.extra()["class_weight"] = r.class_weight;
  m.write(manifest_path_for(a.out));
  return kExitOk;
}

// ----------------------------------------------------------------- segment

struct SegmentArgs {
  std::string model, input, out, prob, slice_axis = "y";
  int levels = 3, factor = 2;
  double threshold = 0.5;
  CLI::Option *o_model{}, *o_input{}, *o_out{};
};

// Probability map of a volume; 2D models run slice by slice.
VoxelVolume model_prob(const riesz::RieszNetwork& net, const VoxelVolume& v, int axis) {
  const int d = net.config().d;
  const int vd = v.dims().dimensionality();
  if (vd == d) return riesz::predict(net, v).prob;
  VoxelVolume out(v.dims(), 0.0f, v.spacing_um());
  std::vector<VoxelVolume> slices(static_cast<std::size_t>(v.dims()[axis]));
  for (std::int64_t s = 0; s < v.dims()[axis]; ++s) {
    slices[static_cast<std::size_t>(s)] = riesz::predict(net, extract_slice(v, axis, s)).prob;
  }
  for (std::int64_t s = 0; s < v.dims()[axis]; ++s) insert_slice(out, axis, s, slices[static_cast<std::size_t>(s)]);
  return out;
}

int cmd_segment(const SegmentArgs& a) {
  require(given(a.o_model), "--model", "segment");
  require(given(a.o_input), "--input", "segment");
  require(given(a.o_out), "--out", "segment");
  multiscale::FusionConfig fc;
  fc.levels = a.levels;
  fc.factor = a.factor;
  fc.threshold = a.threshold;
  fc.validate();
  const int axis = parse_axis(a.slice_axis);
  const riesz::LoadedModel model = riesz::load_model(a.model);
  const VoxelVolume v = load_volume(a.input);
  const int d = model.net.config().d, vd = v.dims().dimensionality();
  if (!(vd == d || (d == 2 && vd == 3))) {
    throw ConfigError("segment: a d=" + std::to_string(d) + " model cannot segment a " + std::to_string(vd) + "D volume");
  }
  const multiscale::Segmenter seg = [&](const VoxelVolume& level) { return model_prob(model.net, level, axis); };
  const multiscale::FusionResult r = multiscale::segment_multiscale_detailed(seg, v, fc);
  save_mask(r.mask, a.out);
  Manifest m("segment", fs::path(a.out).parent_path());
  json cfg{{"model", a.model}, {"input", a.input}, {"out", a.out}, {"levels", a.levels},
           {"factor", a.factor}, {"threshold", a.threshold}, {"slice_axis", a.slice_axis}};
  m.add_input("model", a.model);
  m.add_input("input", a.input);
  m.add_artifact(a.out, {{"kind", "mask"}, {"foreground", count_foreground(r.mask)}});
  if (!a.prob.empty()) {
    save_volume(r.prob, a.prob);
    cfg["prob"] = a.prob;
    m.add_artifact(a.prob, {{"kind", "prob"}});
  }
  m.set_config(cfg);
  m.write(manifest_path_for(a.out));
  info("segment: " + std::to_string(count_foreground(r.mask)) + " crack voxels");
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> pred, gt, ids;
  std::vector<int> tol{0, 1, 2};
  std::string json_out;
};

int cmd_eval(const EvalArgs& a) {
  if (a.pred.empty()) throw ConfigError("eval: --pred is required");
  if (a.pred.size() != a.gt.size()) throw ConfigError("eval: --pred and --gt counts differ");
  if (!a.ids.empty() && a.ids.size() != a.pred.size()) throw ConfigError("eval: --id count differs from --pred");
  for (int t : a.tol) {
    if (t < 0) throw ConfigError("eval: tolerances must be >= 0");
  }
  std::vector<evalmetrics::EvalReport> reports;
  json out{{"tolerances", a.tol}, {"reports", json::array()}};
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    const BinaryMask p = load_mask(a.pred[i]), g = load_mask(a.gt[i]);
    const std::string id = a.ids.empty() ? fs::path(a.pred[i]).stem().string() : a.ids[i];
    reports.push_back(evalmetrics::score(p, g, a.tol, id));
    json rj = reports.back().to_json();
    rj["pred"] = file_ref(fs::absolute(a.pred[i]).lexically_normal());
    rj["gt"] = file_ref(fs::absolute(a.gt[i]).lexically_normal());
    // Chain to the model that produced the prediction, when its manifest is there.
    const fs::path pm = manifest_path_for(a.pred[i]);
    if (fs::exists(pm)) {
      const json man = read_json(pm);
      for (const auto& in : man.value("inputs", json::array())) {
        if (in.value("role", "") == "model" || in.value("role", "") == "input") rj[in["role"].get<std::string>()] = in;
      }
      rj["pred_manifest"] = file_ref(fs::absolute(pm).lexically_normal());
    }
    out["reports"].push_back(std::move(rj));
  }
  out["summary"] = evalmetrics::summarize(reports).to_json();

  std::printf("%-24s %4s %10s %10s %10s\n", "id", "tol", "precision", "recall", "f1");
  for (const auto& r : reports) {
    for (const auto& s : r.scores) {
      std::printf("%-24s %4d %10.4f %10.4f %10.4f\n", r.id.c_str(), s.tolerance, s.precision, s.recall, s.f1);
    }
  }
  if (!a.json_out.empty()) {
    std::ofstream f(a.json_out);
    if (!f) throw Error("cannot write " + a.json_out);
    f << out.dump(2) << '\n';
  }
  return kExitOk;
}

// ----------------------------------------------------------- export-slices

struct ExportArgs {
  std::string volume, mask, out, axis = "z";
  std::vector<std::int64_t> index;
  std::vector<double> window{0.0, 1.0};
  CLI::Option *o_volume{}, *o_out{};
};

int cmd_export(const ExportArgs& a) {
  require(given(a.o_volume), "--volume", "export-slices");
  require(given(a.o_out), "--out", "export-slices");
  if (a.index.empty()) throw ConfigError("export-slices: --index is required");
  if (a.window.size() != 2 || !(a.window[1] > a.window[0])) throw ConfigError("export-slices: --window takes lo,hi with hi > lo");
  const int axis = parse_axis(a.axis);
  const VoxelVolume v = load_volume(a.volume);
  std::optional<BinaryMask> mask;
  if (!a.mask.empty()) {
    mask = load_mask(a.mask);
    require_same_dims(v.dims(), mask->dims(), "export-slices: volume vs mask");
  }
  for (auto i : a.index) {
    if (i < 0 || i >= v.dims()[axis]) {
      throw ConfigError("export-slices: slice index " + std::to_string(i) + " out of range [0, " +
                        std::to_string(v.dims()[axis]) + ")");
    }
  }
  const fs::path out = a.out;
  ensure_dir(out);
  Manifest m("export-slices", out);
  json cfg{{"volume", a.volume}, {"out", a.out}, {"axis", a.axis}, {"index", a.index}, {"window", a.window}};
  m.add_input("volume", a.volume);
  if (mask) {
    cfg["mask"] = a.mask;
    m.add_input("mask", a.mask);
  }
  m.set_config(cfg);
  for (auto i : a.index) {
    const VoxelVolume s = extract_slice(v, axis, i);
    const Image8 img = mask ? overlay_image(s, extract_slice(*mask, axis, i), a.window[0], a.window[1])
                            : gray_image(s, a.window[0], a.window[1]);
    char name[64];
    std::snprintf(name, sizeof name, "slice_%s%04lld.png", a.axis.c_str(), static_cast<long long>(i));
    write_png(img, out / name);
    m.add_artifact(out / name, {{"index", i}});
  }
  m.write(manifest_path_for(out));
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"crackforge: semi-synthetic crack CT images, Riesz network segmentation, tolerant scoring"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "crackforge 0.1.0");
  std::string config_path;
  bool verbose = false, quiet = false;
  app.add_option("--config", config_path, "JSON run config (or a manifest); command-line flags win");
  app.add_flag("-v,--verbose", verbose, "Debug output");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Generate crack masks from a crack spec");
  ga.o_spec = gen->add_option("--spec", ga.spec, "Crack spec JSON")->check(CLI::ExistingFile);
  ga.o_out = gen->add_option("--out", ga.out, "Output directory");
  ga.o_seed = gen->add_option("--seed", ga.seed, "Master seed (overrides the spec)");
  ga.o_count = gen->add_option("--count", ga.count, "Masks per width");
  ga.o_widths = gen->add_option("--widths", ga.widths, "Fixed widths, e.g. 1,3,5")->delimiter(',');
  ga.o_cpi = gen->add_option("--cracks-per-image", ga.cracks_per_image, "Crack surfaces per mask");

  PhantomArgs pa;
  auto* ph = app.add_subcommand("phantom", "Synthesise a crack-free concrete background");
  ph->add_option("--dims", pa.dims, "nx,ny,nz")->delimiter(',');
  ph->add_option("--seed", pa.seed, "Seed");
  pa.o_out = ph->add_option("--out", pa.out, "Output .raw");

  EmbedArgs ea;
  auto* em = app.add_subcommand("embed", "Embed crack masks into a CT background");
  ea.o_background = em->add_option("--background", ea.background, "Background .raw (default: a phantom per mask)")
                        ->check(CLI::ExistingFile);
  em->add_option("--mask", ea.masks, "Crack mask .raw (repeatable)");
  em->add_option("--masks", ea.masks_manifest, "Manifest of a generate run")->check(CLI::ExistingFile);
  ea.o_out = em->add_option("--out", ea.out, "Output directory");
  em->add_option("--seed", ea.seed, "Master seed");
  em->add_option("--alpha", ea.alpha, "Partial-volume weight of the crack value");
  em->add_option("--pore-quantile", ea.pore_quantile, "Dark-phase quantile for the pore gray values");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a Riesz network");
  tr->add_option("--data", ta.data, "Manifest of an embed run (repeatable)");
  tr->add_option("--image", ta.images, "Training image .raw (repeatable, paired with --mask)");
  tr->add_option("--mask", ta.masks, "Training mask .raw (repeatable)");
  ta.o_out = tr->add_option("--out", ta.out, "Output model file");
  tr->add_option("--warm-start", ta.warm_start, "Continue training this model")->check(CLI::ExistingFile);
  ta.o_channels = tr->add_option("--channels", ta.channels, "Channel tuple, e.g. 1,16,16,32,1")->delimiter(',');
  ta.o_d = tr->add_option("--d", ta.d, "Spatial dimension of the network (2 or 3)");
  ta.o_tc = tr->add_option("--train-config", ta.train_config, "Training config JSON")->check(CLI::ExistingFile);
  ta.o_epochs = tr->add_option("--epochs", ta.epochs, "Training epochs");
  ta.o_batch = tr->add_option("--batch-size", ta.batch_size, "Samples per optimiser step");
  ta.o_lr = tr->add_option("--learning-rate,--lr", ta.learning_rate, "Adam step size");
  ta.o_decay = tr->add_option("--lr-decay", ta.lr_decay, "Learning-rate factor per decay period");
  ta.o_period = tr->add_option("--decay-period", ta.decay_period, "Epochs between learning-rate decays");
  ta.o_cw = tr->add_option("--class-weight", ta.class_weight, "Crack-voxel loss weight or 'auto' (p0/p1)");
  ta.o_augment = tr->add_flag("--augment", ta.augment, "Random flips and x/y swaps");
  ta.o_seed = tr->add_option("--seed", ta.seed, "Initialisation and shuffle seed");
  tr->add_option("--slice-axis", ta.slice_axis, "Slice axis when a d=2 model trains on 3D volumes");
  tr->add_option("--slice-step", ta.slice_step, "Use every n-th slice");
  tr->add_flag("--keep-empty", ta.keep_empty, "Keep slices without crack voxels");

  SegmentArgs sa;
  auto* sg = app.add_subcommand("segment", "Multiscale segmentation with a trained model");
  sa.o_model = sg->add_option("--model", sa.model, "Model file")->check(CLI::ExistingFile);
  sa.o_input = sg->add_option("--input", sa.input, "Input .raw")->check(CLI::ExistingFile);
  sa.o_out = sg->add_option("--out", sa.out, "Output mask .raw");
  sg->add_option("--levels", sa.levels, "Pyramid levels (1 = plain prediction)");
  sg->add_option("--factor", sa.factor, "Downsampling factor between levels");
  sg->add_option("--threshold", sa.threshold, "Probability threshold, shared by all levels");
  sg->add_option("--prob", sa.prob, "Also write the fused probability map");
  sg->add_option("--slice-axis", sa.slice_axis, "Slice axis when a d=2 model segments a 3D volume");

  EvalArgs va;
  auto* ev = app.add_subcommand("eval", "Tolerant precision / recall / F1");
  ev->add_option("--pred", va.pred, "Predicted mask .raw (repeatable)");
  ev->add_option("--gt", va.gt, "Ground-truth mask .raw (repeatable)");
  ev->add_option("--id", va.ids, "Report ids (default: prediction file stems)");
  ev->add_option("--tol", va.tol, "Tolerances, e.g. 0,1,2")->delimiter(',');
  ev->add_option("--json", va.json_out, "Write the reports as JSON");

  ExportArgs xa;
  auto* ex = app.add_subcommand("export-slices", "Write 2D slices as PNG, optionally with a mask overlay");
  xa.o_volume = ex->add_option("--volume", xa.volume, "Volume .raw")->check(CLI::ExistingFile);
  ex->add_option("--mask", xa.mask, "Mask .raw drawn in red")->check(CLI::ExistingFile);
  ex->add_option("--axis", xa.axis, "x, y or z");
  ex->add_option("--index", xa.index, "Slice indices, e.g. 10,20")->delimiter(',');
  ex->add_option("--window", xa.window, "Gray window lo,hi mapped to 0..255")->delimiter(',');
  xa.o_out = ex->add_option("--out", xa.out, "Output directory");

  try {
    app.parse(argc, argv);
    g_verbosity = quiet ? 0 : verbose ? 2 : 1;
    kernels::apply_thread_cap();
    debug("threads: " + std::to_string(kernels::worker_threads()));
    ConfigFile cfg;
    if (!config_path.empty()) cfg.load(config_path);
    CLI::App* sub = app.get_subcommands().front();
    cfg.fill(sub);
    const std::string name = sub->get_name();
    if (name == "generate") return cmd_generate(ga, cfg);
    if (name == "phantom") return cmd_phantom(pa);
    if (name == "embed") return cmd_embed(ea);
    if (name == "train") return cmd_train(ta, cfg);
    if (name == "segment") return cmd_segment(sa);
    if (name == "eval") return cmd_eval(va);
    return cmd_export(xa);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "crackforge: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "crackforge: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "crackforge: error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace crackforge::cli
