#include "crackforge/riesz/transform.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "crackforge/volcore/kernels.hpp"
#include "crackforge/volcore/resample.hpp"

namespace crackforge::riesz {

int feature_count(int d) { return d + d * (d + 1) / 2; }

std::vector<RieszIndex> feature_order(int d) {
  if (d != 2 && d != 3) throw ConfigError("riesz: dimensionality must be 2 or 3");
  std::vector<RieszIndex> out;
  for (int k = 0; k < d; ++k) out.push_back({k, -1});
  for (int k = 0; k < d; ++k) {
    for (int l = k; l < d; ++l) out.push_back({k, l});
  }
  return out;
}

std::pair<double, double> multiplier(RieszIndex idx, std::span<const double> xi,
                                     std::span<const bool> nyquist) {
  double r2 = 0.0;
  for (double w : xi) r2 += w * w;
  if (r2 == 0.0) return {0.0, 0.0};
  const auto k = static_cast<std::size_t>(idx.k);
  if (!idx.second_order()) {
    if (nyquist[k]) return {0.0, 0.0};
    return {0.0, -xi[k] / std::sqrt(r2)};
  }
  const auto l = static_cast<std::size_t>(idx.l);
  // The product is odd in a Nyquist component unless both factors sit there.
  if (k != l && nyquist[k] != nyquist[l]) return {0.0, 0.0};
  return {-xi[k] * xi[l] / r2, 0.0};
}

namespace {

std::int64_t axis_pad(std::int64_t n, int pad) { return n > 1 ? pad : 0; }

std::vector<int> fft_shape(const Dims& p) {
  if (p.nz == 1) return {static_cast<int>(p.ny), static_cast<int>(p.nx)};
  return {static_cast<int>(p.nz), static_cast<int>(p.ny), static_cast<int>(p.nx)};
}

struct AxisFreq {
  std::vector<double> w;
  std::vector<char> nyq;
};

AxisFreq axis_freq(std::int64_t n, std::int64_t bins) {
  AxisFreq a;
  for (std::int64_t k = 0; k < bins; ++k) {
    a.w.push_back(fft::angular_frequency(static_cast<std::size_t>(k), static_cast<std::size_t>(n)));
    a.nyq.push_back(n % 2 == 0 && k == n / 2 ? 1 : 0);
  }
  return a;
}

// Visits the half spectrum in storage order, handing each bin's multiplier
// (re, im) to `fn(bin, re, im)`.
template <typename Fn>
void for_each_bin(const Dims& p, int d, RieszIndex idx, Fn&& fn) {
  const AxisFreq fx = axis_freq(p.nx, p.nx / 2 + 1);
  const AxisFreq fy = axis_freq(p.ny, p.ny);
  const AxisFreq fz = axis_freq(p.nz, p.nz);
  const std::size_t hx = static_cast<std::size_t>(p.nx / 2 + 1);
  std::size_t bin = 0;
  double xi[3];
  bool nyq[3];
  for (std::int64_t z = 0; z < p.nz; ++z) {
    for (std::int64_t y = 0; y < p.ny; ++y) {
      for (std::size_t x = 0; x < hx; ++x, ++bin) {
        xi[0] = fx.w[x];
        xi[1] = fy.w[static_cast<std::size_t>(y)];
        xi[2] = fz.w[static_cast<std::size_t>(z)];
        nyq[0] = fx.nyq[x];
        nyq[1] = fy.nyq[static_cast<std::size_t>(y)];
        nyq[2] = fz.nyq[static_cast<std::size_t>(z)];
        const auto [re, im] = multiplier(idx, std::span<const double>(xi, static_cast<std::size_t>(d)),
                                         std::span<const bool>(nyq, static_cast<std::size_t>(d)));
        fn(bin, re, im);
      }
    }
  }
}

}  // namespace

std::shared_ptr<const FeatureBank> FeatureBank::get(const Dims& dims, int pad) {
  static std::mutex m;
  static std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t, int>,
                  std::shared_ptr<const FeatureBank>>
      cache;
  const auto key = std::make_tuple(dims.nx, dims.ny, dims.nz, pad);
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  // Banks hold multiplier tables, so keep the cache bounded.
  if (cache.size() > 32) cache.clear();
  auto b = std::make_shared<const FeatureBank>(dims, pad);
  cache.emplace(key, b);
  return b;
}

FeatureBank::FeatureBank(const Dims& dims, int pad) : dims_(dims), pad_(pad) {
  if (!dims.valid()) throw Error("riesz: empty volume");
  if (pad < 0) throw ConfigError("riesz: pad must be >= 0");
  d_ = dims.dimensionality();
  order_ = feature_order(d_);
  padded_ = {dims.nx + 2 * axis_pad(dims.nx, pad), dims.ny + 2 * axis_pad(dims.ny, pad),
             dims.nz + 2 * axis_pad(dims.nz, pad)};
  plan_ = fft::RealPlan::get(fft_shape(padded_));

  mult_.resize(order_.size());
  for (std::size_t f = 0; f < order_.size(); ++f) {
    auto& m = mult_[f];
    m.assign(plan_->complex_size(), 0.0);
    const bool odd = !order_[f].second_order();
    for_each_bin(padded_, d_, order_[f],
                 [&](std::size_t b, double re, double im) { m[b] = odd ? im : re; });
  }

  src_.resize(padded_.voxels());
  const std::int64_t px = axis_pad(dims.nx, pad), py = axis_pad(dims.ny, pad),
                     pz = axis_pad(dims.nz, pad);
  std::size_t j = 0;
  for (std::int64_t z = 0; z < padded_.nz; ++z) {
    const std::int64_t sz = kernels::mirror_index(z - pz, dims.nz);
    for (std::int64_t y = 0; y < padded_.ny; ++y) {
      const std::int64_t sy = kernels::mirror_index(y - py, dims.ny);
      for (std::int64_t x = 0; x < padded_.nx; ++x, ++j) {
        const std::int64_t sx = kernels::mirror_index(x - px, dims.nx);
        src_[j] = static_cast<std::size_t>((sz * dims.ny + sy) * dims.nx + sx);
      }
    }
  }
}

void FeatureBank::pad_into(std::span<const double> in, fft::RealBuffer& buf) const {
  for (std::size_t j = 0; j < src_.size(); ++j) buf[j] = in[src_[j]];
}

void FeatureBank::crop_from(const fft::RealBuffer& buf, double scale, std::span<double> out) const {
  const std::int64_t px = axis_pad(dims_.nx, pad_), py = axis_pad(dims_.ny, pad_),
                     pz = axis_pad(dims_.nz, pad_);
  std::size_t i = 0;
  for (std::int64_t z = 0; z < dims_.nz; ++z) {
    for (std::int64_t y = 0; y < dims_.ny; ++y) {
      const std::size_t row = static_cast<std::size_t>(((z + pz) * padded_.ny + (y + py)) * padded_.nx + px);
      for (std::int64_t x = 0; x < dims_.nx; ++x, ++i) out[i] = buf[row + static_cast<std::size_t>(x)] * scale;
    }
  }
}

void FeatureBank::forward(std::span<const double> in, std::span<double> out) const {
  const std::size_t v = dims_.voxels();
  if (in.size() != v || out.size() != v * order_.size()) throw Error("riesz: feature buffer size");
  fft::RealBuffer r(plan_->real_size());
  fft::ComplexBuffer spec(plan_->complex_size()), g(plan_->complex_size());
  pad_into(in, r);
  plan_->forward(r, spec);
  const double scale = 1.0 / static_cast<double>(plan_->real_size());
  for (std::size_t f = 0; f < order_.size(); ++f) {
    const auto& m = mult_[f];
    if (order_[f].second_order()) {
      for (std::size_t b = 0; b < m.size(); ++b) g[b] = m[b] * spec[b];
    } else {
      for (std::size_t b = 0; b < m.size(); ++b) g[b] = {-m[b] * spec[b].imag(), m[b] * spec[b].real()};
    }
    plan_->inverse(g, r);
    crop_from(r, scale, out.subspan(f * v, v));
  }
}

void FeatureBank::apply(std::span<const double> in, std::size_t feature,
                        std::span<double> out) const {
  const std::size_t v = dims_.voxels();
  if (in.size() != v || out.size() != v || feature >= order_.size()) throw Error("riesz: feature buffer size");
  fft::RealBuffer r(plan_->real_size());
  fft::ComplexBuffer spec(plan_->complex_size());
  pad_into(in, r);
  plan_->forward(r, spec);
  const auto& m = mult_[feature];
  if (order_[feature].second_order()) {
    for (std::size_t b = 0; b < m.size(); ++b) spec[b] *= m[b];
  } else {
    for (std::size_t b = 0; b < m.size(); ++b) spec[b] = {-m[b] * spec[b].imag(), m[b] * spec[b].real()};
  }
  plan_->inverse(spec, r);
  crop_from(r, 1.0 / static_cast<double>(plan_->real_size()), out);
}

void FeatureBank::adjoint(std::span<const double> gout, std::span<double> gin) const {
  const std::size_t v = dims_.voxels();
  if (gin.size() != v || gout.size() != v * order_.size()) throw Error("riesz: feature buffer size");
  fft::RealBuffer r(plan_->real_size());
  fft::ComplexBuffer spec(plan_->complex_size()), acc(plan_->complex_size());
  const std::int64_t px = axis_pad(dims_.nx, pad_), py = axis_pad(dims_.ny, pad_),
                     pz = axis_pad(dims_.nz, pad_);
  for (std::size_t f = 0; f < order_.size(); ++f) {
    // Zero-embed the cropped gradient (adjoint of the crop).
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = 0.0;
    const auto g = gout.subspan(f * v, v);
    std::size_t i = 0;
    for (std::int64_t z = 0; z < dims_.nz; ++z) {
      for (std::int64_t y = 0; y < dims_.ny; ++y) {
        const std::size_t row = static_cast<std::size_t>(((z + pz) * padded_.ny + (y + py)) * padded_.nx + px);
        for (std::int64_t x = 0; x < dims_.nx; ++x, ++i) r[row + static_cast<std::size_t>(x)] = g[i];
      }
    }
    plan_->forward(r, spec);
    const auto& m = mult_[f];
    // Conjugate multiplier: real parts stay, imaginary parts flip sign.
    if (order_[f].second_order()) {
      for (std::size_t b = 0; b < m.size(); ++b) acc[b] += m[b] * spec[b];
    } else {
      for (std::size_t b = 0; b < m.size(); ++b) {
        acc[b] += std::complex<double>(m[b] * spec[b].imag(), -m[b] * spec[b].real());
      }
    }
  }
  plan_->inverse(acc, r);
  const double scale = 1.0 / static_cast<double>(plan_->real_size());
  std::fill(gin.begin(), gin.end(), 0.0);
  // Adjoint of the mirror pad: fold every padded sample back onto its source.
  for (std::size_t j = 0; j < src_.size(); ++j) gin[src_[j]] += r[j] * scale;
}

VoxelVolume riesz_transform(const VoxelVolume& f, RieszIndex idx, int pad) {
  ensure_finite(f, "riesz_transform");
  const auto bank = FeatureBank::get(f.dims(), pad);
  const auto& order = bank->order();
  std::size_t feature = order.size();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] == idx) feature = i;
  }
  if (feature == order.size()) throw ConfigError("riesz: index out of range for this dimensionality");
  std::vector<double> in(f.data().begin(), f.data().end()), out(f.size());
  bank->apply(in, feature, out);
  VoxelVolume r(f.dims());
  r.set_spacing_um(f.spacing_um());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<float>(out[i]);
  return r;
}

VoxelVolume rescale(const VoxelVolume& f, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("rescale: factor must be positive");
  AxisPositions pos;
  for (int axis = 0; axis < 3; ++axis) {
    const std::int64_t n = f.dims()[axis];
    const std::int64_t m = n == 1 ? 1 : std::llround(static_cast<double>(n) * a);
    if (m < 1) throw Error("rescale: output has zero extent");
    for (std::int64_t y = 0; y < m; ++y) {
      pos[static_cast<std::size_t>(axis)].push_back(n == 1 ? 0.0 : static_cast<double>(y) / a);
    }
  }
  VoxelVolume out = resample_cubic(f, pos);
  out.set_spacing_um(f.spacing_um() / a);
  return out;
}

}  // namespace crackforge::riesz
