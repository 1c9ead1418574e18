#include "crackforge/multiscale/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "crackforge/volcore/resample.hpp"

namespace crackforge::multiscale {

void FusionConfig::validate() const {
  if (levels < 1) throw ConfigError("fusion: levels must be >= 1");
  if (factor < 2) throw ConfigError("fusion: factor must be >= 2");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("fusion: threshold must lie in (0, 1)");
}

namespace {

// Same index map as the nearest-neighbour mask upsampling.
VoxelVolume nearest_up(const VoxelVolume& v, const Dims& target) {
  const auto ratio = upsample_ratio(v.dims(), target);
  std::array<std::vector<std::int64_t>, 3> idx;
  for (int a = 0; a < 3; ++a) {
    const std::int64_t n = v.dims()[a];
    for (std::int64_t i = 0; i < target[a]; ++i) {
      const double t = n == target[a] ? static_cast<double>(i) : static_cast<double>(i) / ratio[static_cast<std::size_t>(a)];
      idx[static_cast<std::size_t>(a)].push_back(std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(t + 0.5)), 0, n - 1));
    }
  }
  VoxelVolume out(target);
  for (std::int64_t z = 0; z < target.nz; ++z) {
    for (std::int64_t y = 0; y < target.ny; ++y) {
      for (std::int64_t x = 0; x < target.nx; ++x) {
        out(x, y, z) = v(idx[0][static_cast<std::size_t>(x)], idx[1][static_cast<std::size_t>(y)],
                         idx[2][static_cast<std::size_t>(z)]);
      }
    }
  }
  return out;
}

}  // namespace

FusionResult segment_multiscale_detailed(const Segmenter& segmenter, const VoxelVolume& v,
                                         const FusionConfig& cfg) {
  cfg.validate();
  if (!segmenter) throw ConfigError("fusion: no segmenter");
  const Pyramid pyr = build_pyramid(v, cfg.levels, cfg.factor);
  FusionResult r;
  r.mask = BinaryMask(v.dims(), 0);
  r.mask.set_spacing_um(v.spacing_um());
  r.prob = VoxelVolume(v.dims(), 0.0f);
  r.prob.set_spacing_um(v.spacing_um());
  // Levels run one after another; each segmenter call parallelises internally,
  // which keeps the big level 0 from running on a single thread.
  for (const auto& level : pyr.levels) {
    const VoxelVolume p = segmenter(level);
    require_same_dims(p.dims(), level.dims(), "segmenter output");
    BinaryMask m(level.dims(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] >= cfg.threshold ? 1 : 0;
    BinaryMask up = upsample_to(m, v.dims());
    const VoxelVolume pu = nearest_up(p, v.dims());
    for (std::size_t i = 0; i < up.size(); ++i) {
      r.mask[i] = (r.mask[i] || up[i]) ? 1 : 0;
      r.prob[i] = std::max(r.prob[i], pu[i]);
    }
    up.set_spacing_um(v.spacing_um());
    r.level_masks.push_back(std::move(up));
  }
  return r;
}

BinaryMask segment_multiscale(const Segmenter& segmenter, const VoxelVolume& v,
                              const FusionConfig& cfg) {
  return segment_multiscale_detailed(segmenter, v, cfg).mask;
}

}  // namespace crackforge::multiscale
