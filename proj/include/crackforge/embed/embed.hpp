#pragma once

#include <cstdint>
#include <vector>

#include "crackforge/volcore/grid.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge::embed {

/// Gray value distribution of the pore phase of a CT background.
struct PoreGvd {
  std::vector<double> edges;          // bins + 1 increasing edges on [0, 1]
  std::vector<std::uint64_t> counts;  // per bin
  double threshold = 0.0;             // dark-phase threshold used
  std::uint64_t voxel_count = 0;      // contributing pore voxels

  [[nodiscard]] std::size_t bins() const { return counts.size(); }
  [[nodiscard]] double mean() const;
  /// Lowest and highest edge of any populated bin.
  [[nodiscard]] double support_lo() const;
  [[nodiscard]] double support_hi() const;
  /// Draw: bin proportional to its count, then uniform within the bin.
  [[nodiscard]] double sample(Rng& rng) const;
};

struct PoreOptions {
  double quantile = 0.02;          // dark-phase threshold quantile
  int bins = 256;
  std::uint64_t min_voxels = 100;
};

/// Pore voxels are those at or below the `quantile` gray value and strictly
/// below the median (so a pore-free background yields no pores), cleaned by one
/// 6-neighbourhood opening. Throws "insufficient pore statistics" with fewer
/// than min_voxels survivors.
[[nodiscard]] PoreGvd estimate_pore_gvd(const VoxelVolume& ct, const PoreOptions& opts = {});

/// Crack voxels with at least one background 6-neighbour become
/// alpha * own + (1 - alpha) * mean(background neighbours), reading the
/// unsmoothed values; everything else is copied.
[[nodiscard]] VoxelVolume partial_volume_smooth(const VoxelVolume& v, const BinaryMask& crack,
                                                double alpha = 0.5);

/// Crack voxels receive i.i.d. draws from the GVD (in storage order), then the
/// partial-volume pass. Background voxels are copied bit for bit.
[[nodiscard]] VoxelVolume embed_crack(const VoxelVolume& ct, const BinaryMask& crack,
                                      const PoreGvd& gvd, std::uint64_t seed,
                                      double alpha = 0.5);

/// Crack-free concrete-like background in [0, 1]: textured cement matrix,
/// brighter aggregate spheres, dark pore spheres and acquisition noise.
struct PhantomParams {
  double matrix = 0.55;
  double texture = 0.03;       // amplitude of smooth matrix texture
  double aggregate = 0.72;
  double aggregate_fraction = 0.25;
  double pore = 0.08;
  double pore_fraction = 0.015;  // below the default pore quantile, so the threshold lands in the gap
  double noise = 0.02;
};

[[nodiscard]] VoxelVolume concrete_phantom(const Dims& dims, std::uint64_t seed,
                                           const PhantomParams& p = {});

}  // namespace crackforge::embed
