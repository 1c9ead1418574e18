#include "crackforge/volcore/morphology.hpp"

namespace crackforge {

BinaryMask dilate_window(const BinaryMask& m, const std::array<std::int64_t, 3>& back,
                         const std::array<std::int64_t, 3>& fwd, kernels::Exec exec) {
  const auto window_or = kernels::window_or(exec);
  BinaryMask cur = m;
  BinaryMask next(m.dims(), 0, m.spacing_um());
  for (int a = 0; a < 3; ++a) {
    if (m.dims()[a] == 1 || (back[a] == 0 && fwd[a] == 0)) continue;
    window_or(cur.data(), next.data(), m.dims(), a, back[a], fwd[a]);
    std::swap(cur, next);
  }
  return cur;
}

BinaryMask dilate_box(const BinaryMask& m, std::int64_t radius, kernels::Exec exec) {
  if (radius < 0) throw ConfigError("dilation radius must be non-negative");
  return dilate_window(m, {radius, radius, radius}, {radius, radius, radius}, exec);
}

namespace {

template <bool Dilate>
BinaryMask cross_step(const BinaryMask& m) {
  const Dims& d = m.dims();
  BinaryMask out(d, 0, m.spacing_um());
  constexpr std::array<std::array<int, 3>, 6> kNbrs{
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  for (std::int64_t z = 0; z < d.nz; ++z) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t x = 0; x < d.nx; ++x) {
        bool v = m(x, y, z) != 0;
        for (const auto& o : kNbrs) {
          const std::int64_t xx = x + o[0], yy = y + o[1], zz = z + o[2];
          if (!m.contains(xx, yy, zz)) continue;  // outside counts as neutral
          const bool n = m(xx, yy, zz) != 0;
          v = Dilate ? (v || n) : (v && n);
        }
        out(x, y, z) = v ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace

BinaryMask dilate_cross(const BinaryMask& m) { return cross_step<true>(m); }
BinaryMask erode_cross(const BinaryMask& m) { return cross_step<false>(m); }
BinaryMask open_cross(const BinaryMask& m) { return dilate_cross(erode_cross(m)); }

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "mask_union");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

}  // namespace crackforge
