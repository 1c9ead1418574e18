#pragma once

#include <random>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::testing {

inline VoxelVolume random_volume(const Dims& d, std::uint64_t seed, float lo = 0.0f,
                                 float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  VoxelVolume v(d);
  for (float& x : v.data()) x = u(rng);
  return v;
}

inline BinaryMask random_mask(const Dims& d, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  BinaryMask m(d);
  for (auto& x : m.data()) x = b(rng) ? 1 : 0;
  return m;
}

}  // namespace crackforge::testing
