#include "crackforge/volcore/resample.hpp"

#include <algorithm>
#include <cmath>

namespace crackforge {

namespace {

std::vector<double> to_double(const VoxelVolume& v) {
  return {v.data().begin(), v.data().end()};
}

VoxelVolume to_volume(const Dims& d, const std::vector<double>& data, double spacing) {
  std::vector<float> out(data.size());
  std::transform(data.begin(), data.end(), out.begin(),
                 [](double x) { return static_cast<float>(x); });
  return VoxelVolume(d, std::move(out), spacing);
}

void check_positions(const AxisPositions& p) {
  for (int a = 0; a < 3; ++a) {
    if (p[a].empty()) throw Error("resample: output dim would be 0 on axis " + std::to_string(a));
  }
}

// Applies `sample` axis by axis (x, then y, then z) over a double buffer.
VoxelVolume separable_sample(const VoxelVolume& v, std::vector<double> buf,
                             const AxisPositions& positions, kernels::SampleAxisFn sample) {
  check_positions(positions);
  Dims cur = v.dims();
  for (int a = 0; a < 3; ++a) {
    Dims next = cur;
    next[a] = static_cast<std::int64_t>(positions[a].size());
    std::vector<double> out(next.voxels());
    sample(buf, cur, a, positions[a], out);
    buf = std::move(out);
    cur = next;
  }
  return to_volume(cur, buf, v.spacing_um());
}

std::vector<double> identity_positions(std::int64_t n) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>(i);
  return p;
}

}  // namespace

VoxelVolume resample_cubic(const VoxelVolume& v, const AxisPositions& positions,
                           kernels::Exec exec) {
  std::vector<double> coeffs = to_double(v);
  const auto prefilter = kernels::bspline_prefilter(exec);
  for (int a = 0; a < 3; ++a) {
    if (v.dims()[a] > 1) prefilter(coeffs, v.dims(), a);
  }
  return separable_sample(v, std::move(coeffs), positions, kernels::cubic_sample(exec));
}

VoxelVolume resample_linear(const VoxelVolume& v, const AxisPositions& positions,
                            kernels::Exec exec) {
  return separable_sample(v, to_double(v), positions, kernels::linear_sample(exec));
}

BinaryMask resample_nearest(const BinaryMask& m, const AxisPositions& positions) {
  check_positions(positions);
  std::array<std::vector<std::int64_t>, 3> idx;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t n = m.dims()[a];
    idx[a].reserve(positions[a].size());
    for (double t : positions[a]) {
      const auto i = static_cast<std::int64_t>(std::floor(t + 0.5));
      idx[a].push_back(std::clamp<std::int64_t>(i, 0, n - 1));
    }
  }
  const Dims od{static_cast<std::int64_t>(idx[0].size()), static_cast<std::int64_t>(idx[1].size()),
                static_cast<std::int64_t>(idx[2].size())};
  BinaryMask out(od, 0, m.spacing_um());
  for (std::int64_t z = 0; z < od.nz; ++z) {
    for (std::int64_t y = 0; y < od.ny; ++y) {
      for (std::int64_t x = 0; x < od.nx; ++x) {
        out(x, y, z) = m(idx[0][static_cast<std::size_t>(x)], idx[1][static_cast<std::size_t>(y)],
                         idx[2][static_cast<std::size_t>(z)]);
      }
    }
  }
  return out;
}

VoxelVolume downsample(const VoxelVolume& v, int factor, kernels::Exec exec) {
  if (factor < 2) throw ConfigError("downsample factor must be >= 2");
  AxisPositions pos;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t n = v.dims()[a];
    if (n == 1) {
      pos[a] = {0.0};
      continue;
    }
    const std::int64_t m = (n + factor - 1) / factor;
    for (std::int64_t i = 0; i < m; ++i) pos[a].push_back(static_cast<double>(i * factor));
  }
  VoxelVolume out = resample_cubic(v, pos, exec);
  out.set_spacing_um(v.spacing_um() * factor);
  return out;
}

std::array<double, 3> upsample_ratio(const Dims& source, const Dims& target) {
  std::array<double, 3> r{};
  for (int a = 0; a < 3; ++a) {
    if (target[a] < source[a]) {
      throw Error("upsample_to: target dims " + target.str() + " smaller than " + source.str());
    }
    r[a] = std::max(1.0, std::round(static_cast<double>(target[a]) /
                                    static_cast<double>(source[a])));
  }
  return r;
}

namespace {

AxisPositions upsample_positions(const Dims& source, const Dims& target) {
  const auto ratio = upsample_ratio(source, target);
  AxisPositions pos;
  for (int a = 0; a < 3; ++a) {
    if (source[a] == target[a]) {
      pos[a] = identity_positions(target[a]);
      continue;
    }
    for (std::int64_t i = 0; i < target[a]; ++i) {
      pos[a].push_back(static_cast<double>(i) / ratio[a]);
    }
  }
  return pos;
}

}  // namespace

VoxelVolume upsample_to(const VoxelVolume& v, const Dims& target, kernels::Exec exec) {
  const auto ratio = upsample_ratio(v.dims(), target);
  VoxelVolume out = resample_linear(v, upsample_positions(v.dims(), target), exec);
  out.set_spacing_um(v.spacing_um() / std::max({ratio[0], ratio[1], ratio[2]}));
  return out;
}

BinaryMask upsample_to(const BinaryMask& m, const Dims& target) {
  const auto ratio = upsample_ratio(m.dims(), target);
  BinaryMask out = resample_nearest(m, upsample_positions(m.dims(), target));
  out.set_spacing_um(m.spacing_um() / std::max({ratio[0], ratio[1], ratio[2]}));
  return out;
}

Pyramid build_pyramid(const VoxelVolume& v, int levels, int factor, kernels::Exec exec) {
  if (levels < 1) throw ConfigError("pyramid needs at least one level");
  Pyramid p;
  p.factor = factor;
  p.levels.push_back(v);
  for (int k = 1; k < levels; ++k) p.levels.push_back(downsample(p.levels.back(), factor, exec));
  return p;
}

VoxelVolume gaussian_blur(const VoxelVolume& v, double sigma) {
  if (!(sigma > 0.0)) return v;
  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::int64_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  std::vector<double> buf = to_double(v);
  std::vector<double> tmp(buf.size());
  const Dims& d = v.dims();
  for (int a = 0; a < 3; ++a) {
    const std::int64_t n = d[a];
    if (n == 1) continue;
    const std::size_t stride = axis_stride(d, a);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const auto coord = static_cast<std::int64_t>((i / stride) % static_cast<std::size_t>(n));
      const std::size_t base = i - static_cast<std::size_t>(coord) * stride;
      double acc = 0.0;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        const std::int64_t j = kernels::mirror_index(coord + k, n);
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               buf[base + static_cast<std::size_t>(j) * stride];
      }
      tmp[i] = acc;
    }
    std::swap(buf, tmp);
  }
  return to_volume(d, buf, v.spacing_um());
}

}  // namespace crackforge
