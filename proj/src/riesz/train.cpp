#include "crackforge/riesz/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "crackforge/evalmetrics/metrics.hpp"
#include "crackforge/riesz/transform.hpp"
#include "crackforge/volcore/augment.hpp"
#include "crackforge/volcore/rng.hpp"

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

namespace crackforge::riesz {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train: lr_decay must lie in (0, 1]");
  if (decay_period < 1) throw ConfigError("train: decay_period must be >= 1");
  if (class_weight && !(*class_weight >= 1.0)) throw ConfigError("train: class weight must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("train: invalid Adam moments");
  }
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_decay = j.value("lr_decay", c.lr_decay);
    c.decay_period = j.value("decay_period", c.decay_period);
    if (j.contains("class_weight") && !j.at("class_weight").is_null()) {
      const auto& w = j.at("class_weight");
      if (w.is_string()) {
        if (w.get<std::string>() != "auto") throw ConfigError("train: class_weight must be a number or \"auto\"");
      } else {
        c.class_weight = w.get<double>();
      }
    }
    c.augment = j.value("augment", c.augment);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"epochs", epochs},       {"batch_size", batch_size}, {"learning_rate", learning_rate},
                   {"lr_decay", lr_decay},   {"decay_period", decay_period}, {"augment", augment},
                   {"seed", seed},           {"beta1", beta1},           {"beta2", beta2},
                   {"adam_eps", adam_eps}};
  if (class_weight) j["class_weight"] = *class_weight;
  else j["class_weight"] = "auto";
  return j;
}

namespace {

// Flips and equal-extent axis swaps only: no zoom, so the training scale is
// exactly the one in the data.
std::pair<VoxelVolume, BinaryMask> rigid_augment(const TrainSample& s, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  AugmentPlan plan;
  const Dims d = s.image.dims();
  for (int a = 0; a < 3; ++a) plan.flip[static_cast<std::size_t>(a)] = d[a] > 1 && coin(rng);
  if (d.nx == d.ny && coin(rng)) plan.permutation = {1, 0, 2};
  return apply_augmentation(s.image, s.mask, plan);
}

struct Adam {
  std::vector<double> m, v;
  std::int64_t t = 0;

  void step(std::vector<double>& p, const std::vector<double>& g, double lr, const TrainConfig& c,
            double bc1, double bc2) {
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.adam_eps);
    }
  }
};

}  // namespace

TrainResult train(RieszNetwork& net, std::span<const TrainSample> data, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& log) {
  cfg.validate();
  if (data.empty()) throw Error("train: empty dataset");
  TrainResult res;
  if (cfg.class_weight) {
    res.class_weight = *cfg.class_weight;
  } else {
    std::vector<BinaryMask> masks;
    masks.reserve(data.size());
    for (const auto& s : data) masks.push_back(s.mask);
    res.class_weight = evalmetrics::class_weight(masks);
  }
  Adam wopt, bopt;
  std::int64_t t = 0;
  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, epoch / cfg.decay_period);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(split_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - b0, static_cast<std::size_t>(cfg.batch_size));
      std::vector<VoxelVolume> imgs;
      std::vector<BinaryMask> masks;
      for (std::size_t k = 0; k < n; ++k) {
        const TrainSample& s = data[order[b0 + k]];
        if (cfg.augment) {
          auto [im, mk] = rigid_augment(s, split_seed(rng(), 0));
          imgs.push_back(std::move(im));
          masks.push_back(std::move(mk));
        } else {
          imgs.push_back(s.image);
          masks.push_back(s.mask);
        }
      }
      StepOptions so;
      so.class_weight = res.class_weight;
      Gradients g;
      const double loss = forward_backward(net, imgs, masks, so, g);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                               std::to_string(batches + 1) + ": loss is " + std::to_string(loss));
      }
      ++t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
      wopt.step(net.weights, g.weights, lr, cfg, bc1, bc2);
      bopt.step(net.bn, g.bn, lr, cfg, bc1, bc2);
      epoch_loss += loss;
      ++batches;
    }
    epoch_loss /= batches;
    res.loss_history.push_back(epoch_loss);
    if (log) log({epoch + 1, epoch_loss, lr});
  }
  return res;
}

BinaryMask threshold_map(const VoxelVolume& prob, double threshold) {
  BinaryMask m(prob.dims(), 0);
  m.set_spacing_um(prob.spacing_um());
  for (std::size_t i = 0; i < prob.size(); ++i) m[i] = prob[i] >= threshold ? 1 : 0;
  return m;
}

Prediction predict(const RieszNetwork& net, const VoxelVolume& v, double threshold) {
  const std::vector<double> p = network_forward(net, v, Mode::eval);
  Prediction out;
  out.prob = VoxelVolume(v.dims());
  out.prob.set_spacing_um(v.spacing_um());
  // Clamp in float so the map stays inside the open unit interval.
  constexpr float lo = 1e-7f, hi = 1.0f - 1e-7f;
  for (std::size_t i = 0; i < p.size(); ++i) out.prob[i] = std::clamp(static_cast<float>(p[i]), lo, hi);
  out.mask = threshold_map(out.prob, threshold);
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'F', 'R', 'I', 'E', 'S', 'Z', '1'};

std::string feature_name(RieszIndex idx) {
  static constexpr const char* ax = "xyz";
  std::string s = "R_";
  s += ax[idx.k];
  if (idx.second_order()) s += ax[idx.l];
  return s;
}

}  // namespace

void save_model(const RieszNetwork& net, const std::filesystem::path& path,
                const nlohmann::json& metadata) {
  const auto& cfg = net.config();
  nlohmann::json h;
  h["format"] = "crackforge-riesz";
  h["version"] = 1;
  h["config"] = {{"channels", cfg.channels}, {"d", cfg.d}};
  h["d"] = cfg.d;
  h["param_count"] = count_params(cfg);
  h["bn_param_count"] = count_bn_params(cfg);
  h["pad"] = RieszNetwork::kPad;
  h["bn_eps"] = RieszNetwork::kBnEps;
  std::vector<std::string> names;
  for (const auto& f : feature_order(cfg.d)) names.push_back(feature_name(f));
  h["feature_order"] = names;
  h["layout"] = "per Riesz layer: coeff[(j*cin+i)*m+f], bias[j]; then head w[j], head b";
  auto& bn = h["batch_norm"] = nlohmann::json::array();
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& lv = net.layers()[l];
    const auto g0 = net.bn.begin() + static_cast<std::ptrdiff_t>(lv.gamma);
    const auto b0 = net.bn.begin() + static_cast<std::ptrdiff_t>(lv.beta);
    bn.push_back({{"gamma", std::vector<double>(g0, g0 + lv.cin)},
                  {"beta", std::vector<double>(b0, b0 + lv.cin)},
                  {"running_mean", net.running_mean[l]},
                  {"running_var", net.running_var[l]}});
  }
  h["metadata"] = metadata;
  const std::string header = h.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<float> w(net.weights.begin(), net.weights.end());
  out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
  if (!out) throw Error("failed writing model file " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error("not a crackforge model file: " + path.string());
  if (len > (std::uint64_t{1} << 30)) throw Error("corrupt model header in " + path.string());
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error("truncated model header in " + path.string());
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
    NetworkConfig cfg;
    cfg.channels = h.at("config").at("channels").get<std::vector<int>>();
    cfg.d = h.at("config").at("d").get<int>();
    LoadedModel m{RieszNetwork(cfg), h.value("metadata", nlohmann::json::object())};
    auto& net = m.net;
    if (h.at("param_count").get<std::int64_t>() != count_params(cfg) ||
        static_cast<std::size_t>(count_params(cfg)) != net.weights.size()) {
      throw Error("model parameter count does not match its config");
    }
    const auto& bn = h.at("batch_norm");
    if (bn.size() != net.layers().size()) throw Error("model batch-norm layer count mismatch");
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const auto& lv = net.layers()[l];
      const auto g = bn[l].at("gamma").get<std::vector<double>>();
      const auto b = bn[l].at("beta").get<std::vector<double>>();
      auto rm = bn[l].at("running_mean").get<std::vector<double>>();
      auto rv = bn[l].at("running_var").get<std::vector<double>>();
      const auto c = static_cast<std::size_t>(lv.cin);
      if (g.size() != c || b.size() != c || rm.size() != c || rv.size() != c) {
        throw Error("model batch-norm size mismatch");
      }
      std::copy(g.begin(), g.end(), net.bn.begin() + static_cast<std::ptrdiff_t>(lv.gamma));
      std::copy(b.begin(), b.end(), net.bn.begin() + static_cast<std::ptrdiff_t>(lv.beta));
      net.running_mean[l] = std::move(rm);
      net.running_var[l] = std::move(rv);
    }
    std::vector<float> w(net.weights.size());
    in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
    if (!in) throw Error("truncated weight block in " + path.string());
    std::copy(w.begin(), w.end(), net.weights.begin());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt model header in " + path.string() + ": " + e.what());
  }
}

}  // namespace crackforge::riesz
