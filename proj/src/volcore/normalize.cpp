#include "crackforge/volcore/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace crackforge {

double quantile(std::span<const float> values, double q) {
  if (values.empty()) throw Error("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile must lie in [0,1]");
  std::vector<float> tmp(values.begin(), values.end());
  const double pos = q * static_cast<double>(tmp.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, tmp.size() - 1);
  std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.end());
  const double a = tmp[lo];
  if (hi == lo) return a;
  // the next order statistic is the minimum of the upper partition
  const double b = *std::min_element(tmp.begin() + static_cast<std::ptrdiff_t>(hi), tmp.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

VoxelVolume normalize_gray(const VoxelVolume& v, double q_low, double q_high) {
  if (!(q_low >= 0.0 && q_low < q_high && q_high <= 1.0)) {
    throw ConfigError("normalize_gray requires 0 <= q_low < q_high <= 1");
  }
  const double lo = quantile(v.data(), q_low);
  const double hi = quantile(v.data(), q_high);
  if (!(hi > lo)) throw Error("normalize_gray: degenerate range (constant volume)");
  VoxelVolume out = v;
  const double scale = 1.0 / (hi - lo);
  for (float& x : out.data()) {
    x = static_cast<float>(std::clamp((static_cast<double>(x) - lo) * scale, 0.0, 1.0));
  }
  return out;
}

}  // namespace crackforge
