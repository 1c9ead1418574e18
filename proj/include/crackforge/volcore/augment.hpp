#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "crackforge/volcore/grid.hpp"

namespace crackforge {

/// One concrete augmentation. Rigid and crop/zoom parts act on image and mask
/// alike; filtering and gray-value distortion touch the image only.
struct AugmentPlan {
  /// Output axis a reads input axis permutation[a]. Only axes of equal extent swap.
  std::array<int, 3> permutation{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};

  /// Crop a box of extent n / zoom starting at crop_origin, zoom back to n.
  double zoom = 1.0;
  std::array<double, 3> crop_origin{0.0, 0.0, 0.0};

  enum class Filter { none, blur, sharpen };
  Filter filter = Filter::none;
  double sigma = 1.0;             // blur sigma, also the unsharp-mask radius
  double sharpen_amount = 0.0;

  double gamma = 1.0;             // v -> gain * max(v,0)^gamma + offset
  double gain = 1.0;
  double offset = 0.0;

  [[nodiscard]] bool is_identity() const;
};

/// Seeded random composition; each of rigid / crop-zoom / filter / gray parts is
/// included with probability 1/2.
[[nodiscard]] AugmentPlan random_augment_plan(const Dims& dims, std::uint64_t seed);

[[nodiscard]] std::pair<VoxelVolume, BinaryMask> apply_augmentation(const VoxelVolume& patch,
                                                                    const BinaryMask& mask,
                                                                    const AugmentPlan& plan);

/// random_augment_plan + apply_augmentation.
[[nodiscard]] std::pair<VoxelVolume, BinaryMask> augment(const VoxelVolume& patch,
                                                         const BinaryMask& mask,
                                                         std::uint64_t seed);

template <typename T>
[[nodiscard]] Grid<T> flip_axis(const Grid<T>& g, int axis);

template <typename T>
[[nodiscard]] Grid<T> permute_axes(const Grid<T>& g, const std::array<int, 3>& permutation);

}  // namespace crackforge
