#include "crackforge/volcore/patches.hpp"

namespace crackforge {

std::vector<std::int64_t> patch_offsets(std::int64_t extent, std::int64_t size,
                                        std::int64_t overlap) {
  if (size <= 0 || size > extent) throw ConfigError("patch size must be in [1, extent]");
  if (overlap < 0 || overlap >= size) throw ConfigError("patch overlap must be in [0, size)");
  const std::int64_t stride = size - overlap;
  std::vector<std::int64_t> out;
  for (std::int64_t o = 0; o + size < extent; o += stride) out.push_back(o);
  if (out.empty() || out.back() != extent - size) out.push_back(extent - size);
  return out;
}

template <typename T>
Grid<T> crop(const Grid<T>& g, const Offset& offset, const Dims& size) {
  for (int a = 0; a < 3; ++a) {
    if (offset[a] < 0 || offset[a] + size[a] > g.dims()[a]) throw Error("crop outside volume");
  }
  Grid<T> out(size, T{}, g.spacing_um());
  for (std::int64_t z = 0; z < size.nz; ++z) {
    for (std::int64_t y = 0; y < size.ny; ++y) {
      for (std::int64_t x = 0; x < size.nx; ++x) {
        out(x, y, z) = g(x + offset[0], y + offset[1], z + offset[2]);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<Patch<T>> extract_patches(const Grid<T>& v, std::int64_t size, std::int64_t overlap) {
  std::array<std::vector<std::int64_t>, 3> offs;
  Dims pd{};
  for (int a = 0; a < 3; ++a) {
    if (v.dims()[a] == 1) {
      offs[a] = {0};
      pd[a] = 1;
    } else {
      offs[a] = patch_offsets(v.dims()[a], size, overlap);
      pd[a] = size;
    }
  }
  std::vector<Patch<T>> out;
  for (std::int64_t oz : offs[2]) {
    for (std::int64_t oy : offs[1]) {
      for (std::int64_t ox : offs[0]) {
        const Offset o{ox, oy, oz};
        out.push_back({o, crop(v, o, pd)});
      }
    }
  }
  return out;
}

template VoxelVolume crop(const VoxelVolume&, const Offset&, const Dims&);
template BinaryMask crop(const BinaryMask&, const Offset&, const Dims&);
template std::vector<Patch<float>> extract_patches(const VoxelVolume&, std::int64_t, std::int64_t);
template std::vector<Patch<std::uint8_t>> extract_patches(const BinaryMask&, std::int64_t,
                                                          std::int64_t);

}  // namespace crackforge
