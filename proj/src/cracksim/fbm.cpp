#include "crackforge/cracksim/fbm.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "crackforge/volcore/fft.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge::cracksim {

void FbmParams::validate() const {
  if (!(hurst > 0.0 && hurst <= 1.0)) throw ConfigError("hurst index must lie in (0, 1]");
  if (grid_n < 2) throw ConfigError("fbm grid_n must be >= 2");
  if (!(amplitude >= 0.0)) throw ConfigError("fbm amplitude must be non-negative");
}

namespace {

constexpr int kAliasTerms = 3;

// sqrt of the periodised spectral density on an m x m torus, DC set to zero.
std::vector<double> spectral_amplitude(std::int64_t m, double hurst) {
  const auto um = static_cast<std::size_t>(m);
  std::vector<double> amp(um * um, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double expo = -(hurst + 1.0);  // applied to |xi|^2
  for (std::size_t ky = 0; ky < um; ++ky) {
    const double fy = fft::angular_frequency(ky, um);
    for (std::size_t kx = 0; kx < um; ++kx) {
      if (kx == 0 && ky == 0) continue;
      const double fx = fft::angular_frequency(kx, um);
      double s = 0.0;
      for (int a = -kAliasTerms; a <= kAliasTerms; ++a) {
        for (int b = -kAliasTerms; b <= kAliasTerms; ++b) {
          const double gx = fx + two_pi * a;
          const double gy = fy + two_pi * b;
          s += std::exp(expo * std::log(gx * gx + gy * gy));
        }
      }
      amp[ky * um + kx] = std::sqrt(s);
    }
  }
  return amp;
}

std::shared_ptr<const std::vector<double>> cached_amplitude(std::int64_t m, double hurst) {
  static std::mutex mu;
  static std::map<std::pair<std::int64_t, double>, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(m, hurst);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto v = std::make_shared<const std::vector<double>>(spectral_amplitude(m, hurst));
  cache.emplace(key, v);
  return v;
}

}  // namespace

HeightField gen_fbm_height_field(const FbmParams& params) {
  params.validate();
  const std::int64_t n = params.grid_n;
  HeightField out{n, std::vector<double>(static_cast<std::size_t>(n * n), 0.0)};
  if (params.amplitude == 0.0) return out;

  const std::int64_t m = 2 * n;
  const auto amp = cached_amplitude(m, params.hurst);
  Rng rng(params.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(m * m));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double re = g(rng);
    const double im = g(rng);
    spec[i] = (*amp)[i] * std::complex<double>(re, im);
  }
  fft::complex_2d(spec, static_cast<int>(m), static_cast<int>(m), +1);

  double mean = 0.0;
  for (std::int64_t y = 0; y < n; ++y) {
    for (std::int64_t x = 0; x < n; ++x) {
      out.at(x, y) = spec[static_cast<std::size_t>(y * m + x)].real();
      mean += out.at(x, y);
    }
  }
  mean /= static_cast<double>(n * n);
  double var = 0.0;
  for (double& v : out.h) {
    v -= mean;
    var += v * v;
  }
  const double sd = std::sqrt(var / static_cast<double>(n * n));
  if (sd > 0.0) {
    for (double& v : out.h) v *= params.amplitude / sd;
  }
  return out;
}

RasterizedSurface rasterize_height_field(const HeightField& h, const Dims& dims, double z_offset) {
  if (h.n < dims.nx || h.n < dims.ny) throw Error("height field smaller than volume footprint");
  for (double v : h.h) {
    if (!std::isfinite(v)) throw Error("height field contains non-finite values");
  }
  RasterizedSurface out{BinaryMask(dims, 0), false};
  constexpr std::array<std::array<int, 2>, 4> kNbrs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  auto level = [](double z) { return static_cast<std::int64_t>(std::floor(z + 0.5)); };
  for (std::int64_t y = 0; y < dims.ny; ++y) {
    for (std::int64_t x = 0; x < dims.nx; ++x) {
      const double c = h.at(x, y);
      double lo = c, hi = c;
      for (const auto& o : kNbrs) {
        const std::int64_t xx = x + o[0], yy = y + o[1];
        if (xx < 0 || yy < 0 || xx >= dims.nx || yy >= dims.ny) continue;
        const double mid = 0.5 * (c + h.at(xx, yy));
        lo = std::min(lo, mid);
        hi = std::max(hi, mid);
      }
      std::int64_t z0 = level(lo + z_offset);
      std::int64_t z1 = level(hi + z_offset);
      if (z0 < 0 || z1 >= dims.nz) out.clipped = true;
      z0 = std::max<std::int64_t>(z0, 0);
      z1 = std::min<std::int64_t>(z1, dims.nz - 1);
      for (std::int64_t z = z0; z <= z1; ++z) out.mask(x, y, z) = 1;
    }
  }
  return out;
}

BinaryMask combine_cracks(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw Error("combine_cracks: no masks");
  BinaryMask out = masks.front();
  for (const BinaryMask& m : masks.subspan(1)) {
    require_same_dims(out.dims(), m.dims(), "combine_cracks");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] || m[i]) ? 1 : 0;
  }
  return out;
}

}  // namespace crackforge::cracksim
