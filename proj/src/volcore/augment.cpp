#include "crackforge/volcore/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crackforge/volcore/resample.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge {

bool AugmentPlan::is_identity() const {
  return permutation == std::array<int, 3>{0, 1, 2} && !flip[0] && !flip[1] && !flip[2] &&
         zoom == 1.0 && filter == Filter::none && gamma == 1.0 && gain == 1.0 && offset == 0.0;
}

template <typename T>
Grid<T> flip_axis(const Grid<T>& g, int axis) {
  const Dims& d = g.dims();
  Grid<T> out(d, T{}, g.spacing_um());
  for (std::int64_t z = 0; z < d.nz; ++z) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t x = 0; x < d.nx; ++x) {
        std::array<std::int64_t, 3> p{x, y, z};
        p[axis] = d[axis] - 1 - p[axis];
        out(x, y, z) = g(p[0], p[1], p[2]);
      }
    }
  }
  return out;
}

template <typename T>
Grid<T> permute_axes(const Grid<T>& g, const std::array<int, 3>& perm) {
  const Dims& d = g.dims();
  const Dims od{d[perm[0]], d[perm[1]], d[perm[2]]};
  Grid<T> out(od, T{}, g.spacing_um());
  for (std::int64_t z = 0; z < od.nz; ++z) {
    for (std::int64_t y = 0; y < od.ny; ++y) {
      for (std::int64_t x = 0; x < od.nx; ++x) {
        std::array<std::int64_t, 3> src{};
        src[perm[0]] = x;
        src[perm[1]] = y;
        src[perm[2]] = z;
        out(x, y, z) = g(src[0], src[1], src[2]);
      }
    }
  }
  return out;
}

template VoxelVolume flip_axis(const VoxelVolume&, int);
template BinaryMask flip_axis(const BinaryMask&, int);
template VoxelVolume permute_axes(const VoxelVolume&, const std::array<int, 3>&);
template BinaryMask permute_axes(const BinaryMask&, const std::array<int, 3>&);

AugmentPlan random_augment_plan(const Dims& dims, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  AugmentPlan p;
  const int spatial = dims.dimensionality();

  if (coin(rng)) {
    // shuffle among axes that share an extent, so dims never change
    std::array<int, 3> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.begin() + spatial, rng);
    bool ok = true;
    for (int a = 0; a < 3; ++a) ok = ok && dims[perm[a]] == dims[a];
    if (ok) p.permutation = perm;
    for (int a = 0; a < spatial; ++a) p.flip[a] = coin(rng);
  }
  if (coin(rng)) {
    p.zoom = 1.0 + 0.25 * u01(rng);
    for (int a = 0; a < spatial; ++a) {
      const double n = static_cast<double>(dims[a]);
      p.crop_origin[a] = (n - n / p.zoom) * u01(rng);
    }
  }
  if (coin(rng)) {
    if (coin(rng)) {
      p.filter = AugmentPlan::Filter::blur;
      p.sigma = 0.5 + 0.7 * u01(rng);
    } else {
      p.filter = AugmentPlan::Filter::sharpen;
      p.sigma = 1.0;
      p.sharpen_amount = 0.3 + 0.7 * u01(rng);
    }
  }
  if (coin(rng)) {
    p.gamma = std::exp(std::log(1.25) * (2.0 * u01(rng) - 1.0));
    p.gain = 0.9 + 0.2 * u01(rng);
    p.offset = 0.1 * u01(rng) - 0.05;
  }
  return p;
}

std::pair<VoxelVolume, BinaryMask> apply_augmentation(const VoxelVolume& patch,
                                                      const BinaryMask& mask,
                                                      const AugmentPlan& plan) {
  require_same_dims(patch.dims(), mask.dims(), "augment");
  VoxelVolume img = patch;
  BinaryMask m = mask;

  if (plan.permutation != std::array<int, 3>{0, 1, 2}) {
    img = permute_axes(img, plan.permutation);
    m = permute_axes(m, plan.permutation);
  }
  for (int a = 0; a < 3; ++a) {
    if (plan.flip[a]) {
      img = flip_axis(img, a);
      m = flip_axis(m, a);
    }
  }
  if (plan.zoom != 1.0) {
    AxisPositions pos;
    for (int a = 0; a < 3; ++a) {
      const std::int64_t n = img.dims()[a];
      for (std::int64_t i = 0; i < n; ++i) {
        pos[a].push_back(n == 1 ? 0.0 : plan.crop_origin[a] + static_cast<double>(i) / plan.zoom);
      }
    }
    img = resample_cubic(img, pos);
    m = resample_nearest(m, pos);
  }
  switch (plan.filter) {
    case AugmentPlan::Filter::none:
      break;
    case AugmentPlan::Filter::blur:
      img = gaussian_blur(img, plan.sigma);
      break;
    case AugmentPlan::Filter::sharpen: {
      const VoxelVolume low = gaussian_blur(img, plan.sigma);
      for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = img[i] + static_cast<float>(plan.sharpen_amount) * (img[i] - low[i]);
      }
      break;
    }
  }
  if (plan.gamma != 1.0 || plan.gain != 1.0 || plan.offset != 0.0) {
    for (float& v : img.data()) {
      const double base = std::max(0.0, static_cast<double>(v));
      v = static_cast<float>(plan.gain * std::pow(base, plan.gamma) + plan.offset);
    }
  }
  ensure_finite(img, "augment");
  return {std::move(img), std::move(m)};
}

std::pair<VoxelVolume, BinaryMask> augment(const VoxelVolume& patch, const BinaryMask& mask,
                                           std::uint64_t seed) {
  return apply_augmentation(patch, mask, random_augment_plan(patch.dims(), seed));
}

}  // namespace crackforge
