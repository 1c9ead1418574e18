#pragma once

#include <array>

#include "crackforge/volcore/grid.hpp"
#include "crackforge/volcore/kernels.hpp"

namespace crackforge {

/// Separable rectangular dilation: output voxel i is set when any input voxel
/// in [i - back, i + fwd] (per axis) is set. `back[a] = N, fwd[a] = 0` grows the
/// foreground N voxels towards +axis.
[[nodiscard]] BinaryMask dilate_window(const BinaryMask& m, const std::array<std::int64_t, 3>& back,
                                       const std::array<std::int64_t, 3>& fwd,
                                       kernels::Exec exec = kernels::Exec::parallel);

/// `radius` iterations of the 26-neighbourhood, i.e. the Chebyshev ball.
[[nodiscard]] BinaryMask dilate_box(const BinaryMask& m, std::int64_t radius,
                                    kernels::Exec exec = kernels::Exec::parallel);

/// One step with the 6-neighbourhood cross.
[[nodiscard]] BinaryMask dilate_cross(const BinaryMask& m);
[[nodiscard]] BinaryMask erode_cross(const BinaryMask& m);
/// Erosion followed by dilation, both with the 6-neighbourhood cross.
[[nodiscard]] BinaryMask open_cross(const BinaryMask& m);

/// Voxelwise OR; all masks must share dims.
[[nodiscard]] BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

}  // namespace crackforge
