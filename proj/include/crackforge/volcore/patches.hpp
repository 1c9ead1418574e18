#pragma once

#include <array>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge {

using Offset = std::array<std::int64_t, 3>;

/// Patch start positions along one axis: multiples of (size - overlap) while the
/// patch stays strictly inside, then one final patch ending at the boundary.
[[nodiscard]] std::vector<std::int64_t> patch_offsets(std::int64_t extent, std::int64_t size,
                                                      std::int64_t overlap);

template <typename T>
struct Patch {
  Offset offset{};
  Grid<T> data;
};

/// Copies the `size` box starting at `offset`.
template <typename T>
[[nodiscard]] Grid<T> crop(const Grid<T>& g, const Offset& offset, const Dims& size);

/// Tiles `v` with cubes of edge `size` (squares when nz == 1).
/// Requires size <= every extent > 1 and 0 <= overlap < size.
template <typename T>
[[nodiscard]] std::vector<Patch<T>> extract_patches(const Grid<T>& v, std::int64_t size,
                                                    std::int64_t overlap);

}  // namespace crackforge
