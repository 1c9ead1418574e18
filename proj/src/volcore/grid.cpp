#include "crackforge/volcore/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace crackforge {

std::int64_t Dims::min_extent() const { return std::min({nx, ny, nz}); }

std::string Dims::str() const {
  std::ostringstream os;
  os << "(" << nx << "," << ny << "," << nz << ")";
  return os.str();
}

void ensure_finite(const VoxelVolume& v, const char* where) {
  for (float x : v.data()) {
    if (!std::isfinite(x)) throw Error(std::string(where) + ": non-finite voxel value");
  }
}

std::size_t count_foreground(const BinaryMask& m) {
  return static_cast<std::size_t>(
      std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t b) { return b != 0; }));
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw Error(std::string(what) + ": dim mismatch " + a.str() + " vs " + b.str());
  }
}

namespace {

struct SliceMap {
  Dims out;
  int u_axis;
  int v_axis;
};

SliceMap slice_map(const Dims& d, int axis) {
  switch (axis) {
    case 0: return {{d.ny, d.nz, 1}, 1, 2};
    case 1: return {{d.nx, d.nz, 1}, 0, 2};
    case 2: return {{d.nx, d.ny, 1}, 0, 1};
    default: throw Error("slice axis must be 0, 1 or 2");
  }
}

}  // namespace

template <typename T>
Grid<T> extract_slice(const Grid<T>& g, int axis, std::int64_t index) {
  const SliceMap map = slice_map(g.dims(), axis);
  if (index < 0 || index >= g.dims()[axis]) throw Error("slice index out of range");
  Grid<T> out(map.out, T{}, g.spacing_um());
  std::array<std::int64_t, 3> p{};
  p[axis] = index;
  for (std::int64_t v = 0; v < map.out.ny; ++v) {
    for (std::int64_t u = 0; u < map.out.nx; ++u) {
      p[map.u_axis] = u;
      p[map.v_axis] = v;
      out(u, v, 0) = g(p[0], p[1], p[2]);
    }
  }
  return out;
}

template <typename T>
void insert_slice(Grid<T>& g, int axis, std::int64_t index, const Grid<T>& slice) {
  const SliceMap map = slice_map(g.dims(), axis);
  if (index < 0 || index >= g.dims()[axis]) throw Error("slice index out of range");
  require_same_dims(map.out, slice.dims(), "insert_slice");
  std::array<std::int64_t, 3> p{};
  p[axis] = index;
  for (std::int64_t v = 0; v < map.out.ny; ++v) {
    for (std::int64_t u = 0; u < map.out.nx; ++u) {
      p[map.u_axis] = u;
      p[map.v_axis] = v;
      g(p[0], p[1], p[2]) = slice(u, v, 0);
    }
  }
}

template VoxelVolume extract_slice(const VoxelVolume&, int, std::int64_t);
template BinaryMask extract_slice(const BinaryMask&, int, std::int64_t);
template void insert_slice(VoxelVolume&, int, std::int64_t, const VoxelVolume&);
template void insert_slice(BinaryMask&, int, std::int64_t, const BinaryMask&);

}  // namespace crackforge
