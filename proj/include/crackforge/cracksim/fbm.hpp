#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::cracksim {

struct FbmParams {
  double hurst = 0.8;       // H in (0, 1]
  std::int64_t grid_n = 64; // lateral resolution
  double amplitude = 4.0;   // standard deviation of the heights, in voxels
  std::uint64_t seed = 0;

  void validate() const;
};

/// Square height field h(x, y), x fastest.
struct HeightField {
  std::int64_t n = 0;
  std::vector<double> h;

  [[nodiscard]] double at(std::int64_t x, std::int64_t y) const {
    return h[static_cast<std::size_t>(y * n + x)];
  }
  double& at(std::int64_t x, std::int64_t y) { return h[static_cast<std::size_t>(y * n + x)]; }
};

/// Fractional Brownian surface by spectral synthesis: complex white noise shaped
/// by the periodised power law sum_m |xi + 2 pi m|^-(H+1) on a 2n x 2n torus,
/// cropped to n x n, centred to zero mean and scaled to standard deviation
/// `amplitude`.
[[nodiscard]] HeightField gen_fbm_height_field(const FbmParams& params);

struct RasterizedSurface {
  BinaryMask mask;
  bool clipped = false;  // some heights left the z range
};

/// Voxelises z = h(x, y) + z_offset. Column (x, y) is filled between the rounded
/// extremes of its own height and the midpoints towards its 4-neighbours, so
/// neighbouring columns always share a voxel level (no z gaps).
[[nodiscard]] RasterizedSurface rasterize_height_field(const HeightField& h, const Dims& dims,
                                                       double z_offset = 0.0);

/// Voxelwise OR of equally sized masks.
[[nodiscard]] BinaryMask combine_cracks(std::span<const BinaryMask> masks);

}  // namespace crackforge::cracksim
