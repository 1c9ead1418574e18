#pragma once

#include <functional>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::multiscale {

/// Any per-volume probability model: returns a map of the input's dims in (0, 1).
using Segmenter = std::function<VoxelVolume(const VoxelVolume&)>;

struct FusionConfig {
  int levels = 3;
  int factor = 2;
  double threshold = 0.5;  // shared by every level

  void validate() const;
};

struct FusionResult {
  BinaryMask mask;                       // OR over levels
  VoxelVolume prob;                      // voxelwise max of nearest-upsampled level maps
  std::vector<BinaryMask> level_masks;   // thresholded, upsampled to the input dims
};

/// Pyramid (spline-3 downsampling), segment and threshold every level, upsample
/// the level masks nearest-neighbour and fuse by voxelwise OR. prob >= threshold
/// reproduces `mask` exactly.
[[nodiscard]] FusionResult segment_multiscale_detailed(const Segmenter& segmenter,
                                                       const VoxelVolume& v,
                                                       const FusionConfig& cfg = {});

[[nodiscard]] BinaryMask segment_multiscale(const Segmenter& segmenter, const VoxelVolume& v,
                                            const FusionConfig& cfg = {});

}  // namespace crackforge::multiscale
