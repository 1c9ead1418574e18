#include "crackforge/embed/embed.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "crackforge/volcore/morphology.hpp"
#include "crackforge/volcore/normalize.hpp"
#include "crackforge/volcore/resample.hpp"

namespace crackforge::embed {

double PoreGvd::mean() const {
  double s = 0.0, n = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double c = static_cast<double>(counts[b]);
    s += c * 0.5 * (edges[b] + edges[b + 1]);
    n += c;
  }
  return n > 0.0 ? s / n : 0.0;
}

double PoreGvd::support_lo() const {
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b]) return edges[b];
  }
  return 0.0;
}

double PoreGvd::support_hi() const {
  for (std::size_t b = counts.size(); b-- > 0;) {
    if (counts[b]) return edges[b + 1];
  }
  return 0.0;
}

double PoreGvd::sample(Rng& rng) const {
  std::discrete_distribution<std::size_t> pick(counts.begin(), counts.end());
  const std::size_t b = pick(rng);
  std::uniform_real_distribution<double> u(edges[b], edges[b + 1]);
  return u(rng);
}

PoreGvd estimate_pore_gvd(const VoxelVolume& ct, const PoreOptions& opts) {
  if (!(opts.quantile > 0.0 && opts.quantile < 1.0)) {
    throw ConfigError("pore quantile must lie in (0, 1)");
  }
  if (opts.bins < 1) throw ConfigError("pore histogram needs at least one bin");
  ensure_finite(ct, "estimate_pore_gvd");
  const double thr = quantile(ct.data(), opts.quantile);
  const double med = quantile(ct.data(), 0.5);
  BinaryMask pores(ct.dims(), 0);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    pores[i] = (ct[i] <= thr && ct[i] < med) ? 1 : 0;
  }
  pores = open_cross(pores);

  PoreGvd g;
  g.threshold = thr;
  const auto nb = static_cast<std::size_t>(opts.bins);
  g.edges.resize(nb + 1);
  for (std::size_t b = 0; b <= nb; ++b) g.edges[b] = static_cast<double>(b) / static_cast<double>(nb);
  g.counts.assign(nb, 0);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    if (!pores[i]) continue;
    const double v = std::clamp(static_cast<double>(ct[i]), 0.0, 1.0);
    const auto b = std::min(nb - 1, static_cast<std::size_t>(v * static_cast<double>(nb)));
    ++g.counts[b];
    ++g.voxel_count;
  }
  if (g.voxel_count < opts.min_voxels) throw Error("insufficient pore statistics");
  return g;
}

VoxelVolume partial_volume_smooth(const VoxelVolume& v, const BinaryMask& crack, double alpha) {
  require_same_dims(v.dims(), crack.dims(), "partial_volume_smooth");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  const Dims d = v.dims();
  VoxelVolume out = v;
  constexpr int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
#pragma omp parallel for schedule(static)
  for (std::int64_t z = 0; z < d.nz; ++z) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t x = 0; x < d.nx; ++x) {
        if (!crack(x, y, z)) continue;
        double s = 0.0;
        int n = 0;
        for (const auto& o : off) {
          const std::int64_t a = x + o[0], b = y + o[1], c = z + o[2];
          if (!crack.contains(a, b, c) || crack(a, b, c)) continue;
          s += v(a, b, c);
          ++n;
        }
        if (n == 0) continue;
        out(x, y, z) = static_cast<float>(alpha * v(x, y, z) + (1.0 - alpha) * s / n);
      }
    }
  }
  return out;
}

VoxelVolume embed_crack(const VoxelVolume& ct, const BinaryMask& crack, const PoreGvd& gvd,
                        std::uint64_t seed, double alpha) {
  require_same_dims(ct.dims(), crack.dims(), "embed_crack");
  if (gvd.counts.empty() || gvd.voxel_count == 0) throw Error("embed_crack: empty gray value distribution");
  VoxelVolume filled = ct;
  Rng rng(seed);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    if (crack[i]) filled[i] = static_cast<float>(gvd.sample(rng));
  }
  return partial_volume_smooth(filled, crack, alpha);
}

namespace {

void paint_spheres(std::vector<std::uint8_t>& label, const Dims& d, Rng& rng, double fraction,
                   double r_lo, double r_hi, std::uint8_t value) {
  const double target = fraction * static_cast<double>(d.voxels());
  const bool flat = d.nz == 1;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double painted = 0.0;
  for (int guard = 0; painted < target && guard < 100000; ++guard) {
    const double r = r_lo + (r_hi - r_lo) * u(rng);
    const double cx = u(rng) * static_cast<double>(d.nx);
    const double cy = u(rng) * static_cast<double>(d.ny);
    const double cz = flat ? 0.0 : u(rng) * static_cast<double>(d.nz);
    painted += flat ? std::numbers::pi * r * r : 4.0 / 3.0 * std::numbers::pi * r * r * r;
    const auto lo = [&](double c) { return static_cast<std::int64_t>(std::floor(c - r)); };
    const auto hi = [&](double c) { return static_cast<std::int64_t>(std::ceil(c + r)); };
    for (std::int64_t z = std::max<std::int64_t>(0, flat ? 0 : lo(cz));
         z <= std::min<std::int64_t>(d.nz - 1, flat ? 0 : hi(cz)); ++z) {
      for (std::int64_t y = std::max<std::int64_t>(0, lo(cy)); y <= std::min(d.ny - 1, hi(cy)); ++y) {
        for (std::int64_t x = std::max<std::int64_t>(0, lo(cx)); x <= std::min(d.nx - 1, hi(cx)); ++x) {
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy, dz = flat ? 0.0 : z + 0.5 - cz;
          if (dx * dx + dy * dy + dz * dz <= r * r) {
            label[static_cast<std::size_t>((z * d.ny + y) * d.nx + x)] = value;
          }
        }
      }
    }
  }
}

}  // namespace

VoxelVolume concrete_phantom(const Dims& dims, std::uint64_t seed, const PhantomParams& p) {
  if (!dims.valid()) throw ConfigError("phantom dims must be positive");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);

  VoxelVolume tex(dims);
  for (float& v : tex.data()) v = static_cast<float>(g(rng));
  tex = gaussian_blur(tex, 2.0);
  double sd = 0.0;
  for (float v : tex.data()) sd += static_cast<double>(v) * v;
  sd = std::sqrt(sd / static_cast<double>(tex.size()));

  std::vector<std::uint8_t> label(dims.voxels(), 0);
  const double ext = static_cast<double>(std::min(dims.nx, dims.ny));
  paint_spheres(label, dims, rng, p.aggregate_fraction, 0.06 * ext, 0.14 * ext, 1);
  paint_spheres(label, dims, rng, p.pore_fraction, 1.5, std::max(2.5, 0.05 * ext), 2);

  VoxelVolume out(dims);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double base = label[i] == 1 ? p.aggregate : label[i] == 2 ? p.pore : p.matrix;
    if (label[i] != 2 && sd > 0.0) base += p.texture * tex[i] / sd;
    base += p.noise * g(rng);
    out[i] = static_cast<float>(std::clamp(base, 0.0, 1.0));
  }
  return out;
}

}  // namespace crackforge::embed
