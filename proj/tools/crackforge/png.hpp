#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::cli {

struct Image8 {
  int width = 0, height = 0;
  int channels = 1;  // 1 gray, 3 RGB
  std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

/// round(255 * (v - lo) / (hi - lo)), saturated.
[[nodiscard]] std::uint8_t quantize(float v, double lo, double hi);

/// 2D grid (nz == 1) to gray pixels, x to the right, y down.
[[nodiscard]] Image8 gray_image(const VoxelVolume& slice, double lo, double hi);

/// Red overlay: mask pixels become (g + 255) / 2, g / 2, g / 2; others stay gray.
[[nodiscard]] Image8 overlay_image(const VoxelVolume& slice, const BinaryMask& mask, double lo,
                                   double hi);

void write_png(const Image8& img, const std::filesystem::path& p);
[[nodiscard]] Image8 read_png(const std::filesystem::path& p);

}  // namespace crackforge::cli
