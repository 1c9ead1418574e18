#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::cracksim {

/// Which corner of the (y, z) cross-section stays fixed while a slice grows.
enum class Anchor { top_left, bottom_right };

[[nodiscard]] Anchor parse_anchor(const std::string& s);
[[nodiscard]] std::string to_string(Anchor a);

/// Per-x-slice dilation counts of a random walk with non-negative increments:
/// N_0 = 0, N_i = N_{i-1} + D_i with P(D_i = 1) = p, otherwise D_i = 0.
struct DilationProfile {
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> counts;
};

[[nodiscard]] DilationProfile draw_dilation_profile(std::int64_t slices, double p,
                                                    std::uint64_t seed);

/// Grows x-slice i by counts[i] voxels in y and z away from the anchor corner.
[[nodiscard]] BinaryMask dilate_slices(const BinaryMask& mask, const DilationProfile& profile,
                                       Anchor anchor = Anchor::top_left);

struct AdaptiveResult {
  BinaryMask mask;
  DilationProfile profile;
};

/// Width that varies along x; p in (0, 1).
[[nodiscard]] AdaptiveResult adaptive_dilate(const BinaryMask& mask, double p, std::uint64_t seed,
                                             Anchor anchor = Anchor::top_left);

/// Constant width w >= 1 voxels: (w-1)/2 Chebyshev-1 dilations, plus one
/// one-sided 2x2x2 step for even w.
[[nodiscard]] BinaryMask dilate_fixed_width(const BinaryMask& mask, int width);

}  // namespace crackforge::cracksim
