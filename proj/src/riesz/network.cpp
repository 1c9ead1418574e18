#include "crackforge/riesz/network.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "crackforge/riesz/transform.hpp"
#include "crackforge/volcore/kernels.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge::riesz {

void NetworkConfig::validate() const {
  if (d != 2 && d != 3) throw ConfigError("network: d must be 2 or 3");
  if (channels.size() < 2) throw ConfigError("network: need at least input and output channels");
  if (channels.front() != 1) throw ConfigError("network: first channel count must be 1");
  if (channels.back() != 1) throw ConfigError("network: last channel count must be 1");
  for (int c : channels) {
    if (c < 1) throw ConfigError("network: channel counts must be >= 1");
  }
}

std::int64_t count_params(const NetworkConfig& cfg) {
  cfg.validate();
  const std::int64_t m = feature_count(cfg.d);
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 2 < cfg.channels.size(); ++l) {
    const std::int64_t cin = cfg.channels[l], cout = cfg.channels[l + 1];
    n += cin * m * cout + cout;
  }
  return n + cfg.channels[cfg.channels.size() - 2] + 1;
}

std::int64_t count_bn_params(const NetworkConfig& cfg) {
  cfg.validate();
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 2 < cfg.channels.size(); ++l) n += 2 * cfg.channels[l];
  return n;
}

RieszNetwork::RieszNetwork(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  m_ = feature_count(cfg_.d);
  std::size_t w = 0, b = 0;
  for (std::size_t l = 0; l < cfg_.riesz_layers(); ++l) {
    LayerView v;
    v.cin = cfg_.channels[l];
    v.cout = cfg_.channels[l + 1];
    v.coeff = w;
    w += static_cast<std::size_t>(v.cin * v.cout * m_);
    v.bias = w;
    w += static_cast<std::size_t>(v.cout);
    v.gamma = b;
    v.beta = b + static_cast<std::size_t>(v.cin);
    b += 2 * static_cast<std::size_t>(v.cin);
    views_.push_back(v);
    running_mean.emplace_back(static_cast<std::size_t>(v.cin), 0.0);
    running_var.emplace_back(static_cast<std::size_t>(v.cin), 1.0);
  }
  head_w_ = w;
  w += static_cast<std::size_t>(cfg_.channels[cfg_.channels.size() - 2]) + 1;
  weights.assign(w, 0.0);
  bn.assign(b, 0.0);
  for (const auto& v : views_) {
    std::fill_n(bn.begin() + static_cast<std::ptrdiff_t>(v.gamma), v.cin, 1.0);
  }
}

RieszNetwork RieszNetwork::initialized(const NetworkConfig& cfg, std::uint64_t seed) {
  RieszNetwork net(cfg);
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& v : net.views_) {
    const double s = std::sqrt(2.0 / static_cast<double>(v.cin * net.m_));
    for (int k = 0; k < v.cin * v.cout * net.m_; ++k) {
      net.weights[v.coeff + static_cast<std::size_t>(k)] = s * g(rng);
    }
  }
  const int c = cfg.channels[cfg.channels.size() - 2];
  const double s = 1.0 / std::sqrt(static_cast<double>(c));
  for (int j = 0; j < c; ++j) net.weights[net.head_w_ + static_cast<std::size_t>(j)] = s * g(rng);
  return net;
}

namespace {

constexpr int kChunk = 8;  // input channels transformed together; fixed for reproducible sums
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void layer_forward(const FeatureBank& bank, std::span<const double> coeff,
                   std::span<const double> bias, int cin, int cout, std::span<const double> in,
                   std::span<double> out) {
  const std::size_t v = bank.dims().voxels();
  const auto m = bank.features();
  for (int j = 0; j < cout; ++j) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(j) * v), v,
                bias[static_cast<std::size_t>(j)]);
  }
  std::vector<double> feats, sub, tmp(static_cast<std::size_t>(cout) * v);
  const std::vector<double> zero(static_cast<std::size_t>(cout), 0.0);
  for (int i0 = 0; i0 < cin; i0 += kChunk) {
    const int n = std::min(kChunk, cin - i0);
    feats.resize(static_cast<std::size_t>(n) * m * v);
#pragma omp parallel for schedule(static) if (!omp_in_parallel() && n > 1)
    for (int i = 0; i < n; ++i) {
      bank.forward(in.subspan(static_cast<std::size_t>(i0 + i) * v, v),
                   std::span<double>(feats).subspan(static_cast<std::size_t>(i) * m * v, m * v));
    }
    sub.resize(static_cast<std::size_t>(cout * n) * m);
    for (int j = 0; j < cout; ++j) {
      for (int i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < m; ++f) {
          sub[(static_cast<std::size_t>(j * n + i)) * m + f] =
              coeff[(static_cast<std::size_t>(j * cin + i0 + i)) * m + f];
        }
      }
    }
    kernels::channel_mix(kernels::Exec::parallel)(feats, sub, zero, static_cast<std::size_t>(n),
                                                  static_cast<std::size_t>(cout), m, v, tmp);
    for (std::size_t k = 0; k < tmp.size(); ++k) out[k] += tmp[k];
  }
}

struct SampleCache {
  std::vector<std::vector<double>> xhat;  // per layer, cin * V
  std::vector<std::vector<double>> z;     // per layer, cout * V (pre-ReLU)
  std::vector<double> last;               // head input, c(K-1) * V
  std::vector<double> prob;
};

struct LayerStats {
  std::vector<double> mean, var;
};

// Per-channel mean and biased variance over all voxels of all samples, summed in
// sample order.
LayerStats batch_stats(const std::vector<std::vector<double>>& act, int c,
                       const std::vector<std::size_t>& voxels) {
  const std::size_t s = act.size();
  std::vector<double> part(s * static_cast<std::size_t>(c), 0.0);
  double total = 0.0;
  for (auto n : voxels) total += static_cast<double>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < s; ++k) {
    for (int ch = 0; ch < c; ++ch) {
      const double* a = act[k].data() + static_cast<std::size_t>(ch) * voxels[k];
      double acc = 0.0;
      for (std::size_t i = 0; i < voxels[k]; ++i) acc += a[i];
      part[k * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = acc;
    }
  }
  LayerStats st;
  st.mean.assign(static_cast<std::size_t>(c), 0.0);
  st.var.assign(static_cast<std::size_t>(c), 0.0);
  for (std::size_t k = 0; k < s; ++k) {
    for (int ch = 0; ch < c; ++ch) st.mean[static_cast<std::size_t>(ch)] += part[k * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)];
  }
  for (auto& m : st.mean) m /= total;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < s; ++k) {
    for (int ch = 0; ch < c; ++ch) {
      const double* a = act[k].data() + static_cast<std::size_t>(ch) * voxels[k];
      const double mu = st.mean[static_cast<std::size_t>(ch)];
      double acc = 0.0;
      for (std::size_t i = 0; i < voxels[k]; ++i) acc += (a[i] - mu) * (a[i] - mu);
      part[k * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = acc;
    }
  }
  for (std::size_t k = 0; k < s; ++k) {
    for (int ch = 0; ch < c; ++ch) st.var[static_cast<std::size_t>(ch)] += part[k * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)];
  }
  for (auto& v : st.var) v /= total;
  return st;
}

// Forward pass over a batch. Layer activations are kept in `caches` only when
// `keep` is set (backward needs them; plain inference does not).
std::vector<LayerStats> forward_batch(RieszNetwork& net, std::span<const VoxelVolume> images,
                                      Mode mode, bool update_running, bool keep,
                                      std::vector<SampleCache>& caches) {
  const auto& cfg = net.config();
  const std::size_t s = images.size();
  const int m = net.m();
  std::vector<std::size_t> voxels(s);
  std::vector<std::vector<double>> act(s);
  for (std::size_t k = 0; k < s; ++k) {
    if (images[k].dims().dimensionality() != cfg.d) {
      throw Error("network: input dimensionality " + std::to_string(images[k].dims().dimensionality()) +
                  " does not match d = " + std::to_string(cfg.d));
    }
    ensure_finite(images[k], "network_forward");
    voxels[k] = images[k].size();
    act[k].assign(images[k].data().begin(), images[k].data().end());
  }
  caches.assign(s, {});
  std::vector<LayerStats> used;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const LayerView& lv = net.layers()[l];
    LayerStats st;
    if (mode == Mode::train) {
      st = batch_stats(act, lv.cin, voxels);
      if (update_running) {
        for (int c = 0; c < lv.cin; ++c) {
          const auto cc = static_cast<std::size_t>(c);
          net.running_mean[l][cc] = RieszNetwork::kBnMomentum * net.running_mean[l][cc] +
                                    (1.0 - RieszNetwork::kBnMomentum) * st.mean[cc];
          net.running_var[l][cc] = RieszNetwork::kBnMomentum * net.running_var[l][cc] +
                                   (1.0 - RieszNetwork::kBnMomentum) * st.var[cc];
        }
      }
    } else {
      st.mean = net.running_mean[l];
      st.var = net.running_var[l];
    }
    const std::span<const double> coeff(net.weights.data() + lv.coeff,
                                        static_cast<std::size_t>(lv.cin * lv.cout * m));
    const std::span<const double> bias(net.weights.data() + lv.bias, static_cast<std::size_t>(lv.cout));
#pragma omp parallel for schedule(dynamic) if (s > 1)
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t v = voxels[k];
      std::vector<double> xh(static_cast<std::size_t>(lv.cin) * v), y(xh.size());
      for (int c = 0; c < lv.cin; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const double inv = 1.0 / std::sqrt(st.var[cc] + RieszNetwork::kBnEps);
        const double g = net.bn[lv.gamma + cc], b = net.bn[lv.beta + cc];
        for (std::size_t i = 0; i < v; ++i) {
          const double t = (act[k][cc * v + i] - st.mean[cc]) * inv;
          xh[cc * v + i] = t;
          y[cc * v + i] = g * t + b;
        }
      }
      std::vector<double> z(static_cast<std::size_t>(lv.cout) * v);
      const auto bank = FeatureBank::get(images[k].dims(), RieszNetwork::kPad);
      layer_forward(*bank, coeff, bias, lv.cin, lv.cout, y, z);
      act[k].resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) act[k][i] = std::max(0.0, z[i]);
      if (keep) {
        caches[k].xhat.push_back(std::move(xh));
        caches[k].z.push_back(std::move(z));
      }
    }
    used.push_back(std::move(st));
  }
  const int c = cfg.channels[cfg.channels.size() - 2];
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t v = voxels[k];
    auto& p = caches[k].prob;
    p.assign(v, net.weights[net.head_b()]);
    for (int j = 0; j < c; ++j) {
      const double w = net.weights[net.head_w() + static_cast<std::size_t>(j)];
      const double* a = act[k].data() + static_cast<std::size_t>(j) * v;
      for (std::size_t i = 0; i < v; ++i) p[i] += w * a[i];
    }
    for (auto& t : p) t = sigmoid(t);
    caches[k].last = std::move(act[k]);
  }
  return used;
}

}  // namespace

std::vector<double> riesz_layer_forward(std::span<const double> coeff, std::span<const double> bias,
                                        int cin, int cout, std::span<const double> input,
                                        const Dims& dims, int pad) {
  const auto bank = FeatureBank::get(dims, pad);
  const std::size_t v = dims.voxels();
  if (input.size() != static_cast<std::size_t>(cin) * v) throw Error("riesz layer: channel mismatch");
  if (coeff.size() != static_cast<std::size_t>(cin * cout) * bank->features() ||
      bias.size() != static_cast<std::size_t>(cout)) {
    throw Error("riesz layer: coefficient count mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(cout) * v);
  layer_forward(*bank, coeff, bias, cin, cout, input, out);
  return out;
}

std::vector<double> network_forward(const RieszNetwork& net, const VoxelVolume& f, Mode mode) {
  // With update_running == false forward_batch never writes to the network.
  std::vector<SampleCache> caches;
  (void)forward_batch(const_cast<RieszNetwork&>(net), std::span<const VoxelVolume>(&f, 1), mode,
                      false, false, caches);
  auto p = std::move(caches[0].prob);
  for (auto& t : p) t = std::clamp(t, kClampLo, kClampHi);
  return p;
}

double batch_loss(const RieszNetwork& net, std::span<const VoxelVolume> images,
                  std::span<const BinaryMask> masks, double class_weight) {
  if (images.empty() || images.size() != masks.size()) throw Error("batch_loss: bad batch");
  std::vector<SampleCache> caches;
  (void)forward_batch(const_cast<RieszNetwork&>(net), images, Mode::train, false, false, caches);
  double loss = 0.0;
  for (std::size_t k = 0; k < images.size(); ++k) {
    require_same_dims(images[k].dims(), masks[k].dims(), "batch_loss");
    const auto& p = caches[k].prob;
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double pc = std::clamp(p[i], kClampLo, kClampHi);
      acc -= masks[k][i] ? class_weight * std::log(pc) : std::log(1.0 - pc);
    }
    loss += acc / static_cast<double>(p.size());
  }
  return loss / static_cast<double>(images.size());
}

LossValue weighted_bce_loss(std::span<const double> pred, std::span<const std::uint8_t> gt,
                            double w) {
  if (pred.size() != gt.size()) throw Error("weighted_bce_loss: size mismatch");
  if (pred.empty()) throw Error("weighted_bce_loss: empty input");
  LossValue r;
  r.grad.resize(pred.size());
  const double n = static_cast<double>(pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kClampLo, kClampHi);
    const bool inside = pred[i] >= kClampLo && pred[i] <= kClampHi;
    if (gt[i]) {
      acc -= w * std::log(p);
      r.grad[i] = inside ? -w / (p * n) : 0.0;
    } else {
      acc -= std::log(1.0 - p);
      r.grad[i] = inside ? 1.0 / ((1.0 - p) * n) : 0.0;
    }
  }
  r.loss = acc / n;
  return r;
}

double forward_backward(RieszNetwork& net, std::span<const VoxelVolume> images,
                        std::span<const BinaryMask> masks, const StepOptions& opts,
                        Gradients& grads) {
  if (images.empty()) throw Error("forward_backward: empty batch");
  if (images.size() != masks.size()) throw Error("forward_backward: image/mask count mismatch");
  for (std::size_t k = 0; k < images.size(); ++k) {
    require_same_dims(images[k].dims(), masks[k].dims(), "forward_backward");
  }
  const auto& cfg = net.config();
  const int m = net.m();
  const std::size_t s = images.size();
  std::vector<SampleCache> caches;
  const auto stats = forward_batch(net, images, Mode::train, opts.update_running_stats, true, caches);

  grads.weights.assign(net.weights.size(), 0.0);
  grads.bn.assign(net.bn.size(), 0.0);
  grads.input.clear();

  // Loss and d loss / d logit per sample; the batch loss is the sample mean.
  const int c_last = cfg.channels[cfg.channels.size() - 2];
  std::vector<double> losses(s);
  std::vector<std::vector<double>> ga(s);
  std::vector<std::vector<double>> head_part(s, std::vector<double>(static_cast<std::size_t>(c_last) + 1, 0.0));
#pragma omp parallel for schedule(dynamic) if (s > 1)
  for (std::size_t k = 0; k < s; ++k) {
    const auto& p = caches[k].prob;
    const std::size_t v = p.size();
    const double n = static_cast<double>(v) * static_cast<double>(s);
    std::vector<double> gl(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      const double pc = std::clamp(p[i], kClampLo, kClampHi);
      const bool inside = p[i] >= kClampLo && p[i] <= kClampHi;
      const bool y = masks[k][i] != 0;
      acc -= y ? opts.class_weight * std::log(pc) : std::log(1.0 - pc);
      // d/dlogit of the clamped loss: sigmoid' folds into the log terms.
      gl[i] = inside ? (y ? -opts.class_weight * (1.0 - p[i]) : p[i]) / n : 0.0;
    }
    losses[k] = acc / static_cast<double>(v);
    auto& hp = head_part[k];
    const auto& a = caches[k].last;
    ga[k].assign(static_cast<std::size_t>(c_last) * v, 0.0);
    for (int j = 0; j < c_last; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double w = net.weights[net.head_w() + jj];
      double dw = 0.0;
      for (std::size_t i = 0; i < v; ++i) {
        dw += gl[i] * a[jj * v + i];
        ga[k][jj * v + i] = w * gl[i];
      }
      hp[jj] = dw;
    }
    double db = 0.0;
    for (double g : gl) db += g;
    hp[static_cast<std::size_t>(c_last)] = db;
  }
  double loss = 0.0;
  for (std::size_t k = 0; k < s; ++k) {
    loss += losses[k];
    for (int j = 0; j <= c_last; ++j) grads.weights[net.head_w() + static_cast<std::size_t>(j)] += head_part[k][static_cast<std::size_t>(j)];
  }
  loss /= static_cast<double>(s);

  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const LayerView& lv = net.layers()[l];
    const auto cin = static_cast<std::size_t>(lv.cin), cout = static_cast<std::size_t>(lv.cout);
    const auto mm = static_cast<std::size_t>(m);
    // Per-sample parameter gradients and batch-norm partial sums.
    std::vector<std::vector<double>> dcoeff(s), dbias(s), sg(s), sgx(s);
    std::vector<std::vector<double>> gy(s);
#pragma omp parallel for schedule(dynamic) if (s > 1)
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t v = images[k].size();
      const auto& z = caches[k].z[l];
      const auto& xh = caches[k].xhat[l];
      auto& g = ga[k];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (z[i] <= 0.0) g[i] = 0.0;
      }
      dcoeff[k].assign(cin * cout * mm, 0.0);
      dbias[k].assign(cout, 0.0);
      for (std::size_t j = 0; j < cout; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v; ++i) acc += g[j * v + i];
        dbias[k][j] = acc;
      }
      const auto bank = FeatureBank::get(images[k].dims(), RieszNetwork::kPad);
      std::vector<double> y(v), feat(mm * v), gfeat(mm * v);
      gy[k].assign(cin * v, 0.0);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double gm = net.bn[lv.gamma + ci], bt = net.bn[lv.beta + ci];
        for (std::size_t i = 0; i < v; ++i) y[i] = gm * xh[ci * v + i] + bt;
        bank->forward(y, feat);
        std::fill(gfeat.begin(), gfeat.end(), 0.0);
        for (std::size_t j = 0; j < cout; ++j) {
          const double* gj = g.data() + j * v;
          for (std::size_t f = 0; f < mm; ++f) {
            const double* ff = feat.data() + f * v;
            double acc = 0.0;
            for (std::size_t i = 0; i < v; ++i) acc += gj[i] * ff[i];
            dcoeff[k][(j * cin + ci) * mm + f] = acc;
            const double c = net.weights[lv.coeff + (j * cin + ci) * mm + f];
            double* gf = gfeat.data() + f * v;
            for (std::size_t i = 0; i < v; ++i) gf[i] += c * gj[i];
          }
        }
        bank->adjoint(gfeat, std::span<double>(gy[k]).subspan(ci * v, v));
      }
      sg[k].assign(cin, 0.0);
      sgx[k].assign(cin, 0.0);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < v; ++i) {
          a += gy[k][ci * v + i];
          b += gy[k][ci * v + i] * xh[ci * v + i];
        }
        sg[k][ci] = a;
        sgx[k][ci] = b;
      }
    }
    std::vector<double> tg(cin, 0.0), tgx(cin, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
      total += static_cast<double>(images[k].size());
      for (std::size_t q = 0; q < dcoeff[k].size(); ++q) grads.weights[lv.coeff + q] += dcoeff[k][q];
      for (std::size_t j = 0; j < cout; ++j) grads.weights[lv.bias + j] += dbias[k][j];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        tg[ci] += sg[k][ci];
        tgx[ci] += sgx[k][ci];
      }
    }
    for (std::size_t ci = 0; ci < cin; ++ci) {
      grads.bn[lv.beta + ci] = tg[ci];
      grads.bn[lv.gamma + ci] = tgx[ci];
    }
    // d loss / d (layer input) through batch norm with batch statistics.
#pragma omp parallel for schedule(dynamic) if (s > 1)
    for (std::size_t k = 0; k < s; ++k) {
      const std::size_t v = images[k].size();
      const auto& xh = caches[k].xhat[l];
      ga[k].assign(cin * v, 0.0);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double scale = net.bn[lv.gamma + ci] / std::sqrt(stats[l].var[ci] + RieszNetwork::kBnEps);
        const double mg = tg[ci] / total, mgx = tgx[ci] / total;
        for (std::size_t i = 0; i < v; ++i) {
          ga[k][ci * v + i] = scale * (gy[k][ci * v + i] - mg - xh[ci * v + i] * mgx);
        }
      }
    }
  }
  if (opts.input_gradients) grads.input = std::move(ga);
  return loss;
}

}  // namespace crackforge::riesz
