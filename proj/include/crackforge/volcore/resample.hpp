#pragma once

#include <array>
#include <vector>

#include "crackforge/volcore/grid.hpp"
#include "crackforge/volcore/kernels.hpp"

namespace crackforge {

/// Sample coordinates (in input voxel units) for every output index, per axis.
using AxisPositions = std::array<std::vector<double>, 3>;

/// Cubic B-spline interpolation (mirror boundary) at the tensor grid `positions`.
[[nodiscard]] VoxelVolume resample_cubic(const VoxelVolume& v, const AxisPositions& positions,
                                         kernels::Exec exec = kernels::Exec::parallel);

/// Trilinear interpolation (edge clamp) at the tensor grid `positions`.
[[nodiscard]] VoxelVolume resample_linear(const VoxelVolume& v, const AxisPositions& positions,
                                          kernels::Exec exec = kernels::Exec::parallel);

/// Nearest-neighbour lookup (round half up, edge clamp) at `positions`.
[[nodiscard]] BinaryMask resample_nearest(const BinaryMask& m, const AxisPositions& positions);

/// Coarse grid: dims ceil(n / factor), coarse voxel m sits at input coordinate m * factor.
/// Axes of extent 1 are left alone. Spacing grows by `factor`.
[[nodiscard]] VoxelVolume downsample(const VoxelVolume& v, int factor,
                                     kernels::Exec exec = kernels::Exec::parallel);

/// Per-axis integer ratio target/source used to map fine voxel x to coarse x / ratio.
[[nodiscard]] std::array<double, 3> upsample_ratio(const Dims& source, const Dims& target);

/// Trilinear upsampling of a probability map to `target` (>= v.dims componentwise).
[[nodiscard]] VoxelVolume upsample_to(const VoxelVolume& v, const Dims& target,
                                      kernels::Exec exec = kernels::Exec::parallel);

/// Nearest-neighbour upsampling of a mask to `target`.
[[nodiscard]] BinaryMask upsample_to(const BinaryMask& m, const Dims& target);

/// Resolution pyramid; level 0 is the input, level k+1 = downsample(level k, factor).
struct Pyramid {
  std::vector<VoxelVolume> levels;
  int factor = 2;
};

[[nodiscard]] Pyramid build_pyramid(const VoxelVolume& v, int levels = 3, int factor = 2,
                                    kernels::Exec exec = kernels::Exec::parallel);

/// Separable Gaussian smoothing with mirror boundary; sigma in voxels.
[[nodiscard]] VoxelVolume gaussian_blur(const VoxelVolume& v, double sigma);

}  // namespace crackforge
