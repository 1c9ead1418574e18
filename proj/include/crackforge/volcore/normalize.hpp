#pragma once

#include <span>

#include "crackforge/volcore/grid.hpp"

namespace crackforge {

/// Linearly interpolated sample quantile (position q*(n-1) in sorted order).
[[nodiscard]] double quantile(std::span<const float> values, double q);

/// Maps the q_low quantile to 0 and the q_high quantile to 1, then clips to [0,1].
/// Throws "degenerate range" when the two quantiles coincide.
[[nodiscard]] VoxelVolume normalize_gray(const VoxelVolume& v, double q_low = 0.001,
                                         double q_high = 0.999);

}  // namespace crackforge
