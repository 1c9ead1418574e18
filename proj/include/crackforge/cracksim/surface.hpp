#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crackforge/cracksim/voronoi.hpp"
#include "crackforge/volcore/grid.hpp"

namespace crackforge::cracksim {

/// Closed edge cycle on the lateral window faces through one anchor per vertical
/// window edge (corner order (lo,lo), (hi,lo), (hi,hi), (lo,hi) in x, y).
struct BoundaryCycle {
  std::array<std::size_t, 4> anchors{};
  std::vector<std::size_t> edges;
  double weight = 0.0;
};

/// Window face containing the lateral path from anchor k to anchor k+1.
[[nodiscard]] int lateral_face(int k);

/// Shortest path (Dijkstra on edge weights) between two vertices using only edges
/// that lie in window face `face`. Edges marked in `blocked` are skipped; with
/// allow_box_edges == false so are edges on the window's own edges, which keeps
/// the path inside the face.
/// Returns edge ids in path order; empty when unreachable.
[[nodiscard]] std::vector<std::size_t> face_shortest_path(const Tessellation& t, int face,
                                                          std::size_t source, std::size_t target,
                                                          const std::vector<std::uint8_t>& blocked,
                                                          bool allow_box_edges);

[[nodiscard]] BoundaryCycle boundary_cycle(const Tessellation& t, std::uint64_t seed);

/// Per-edge parity of edge usage (1 = boundary edge).
[[nodiscard]] std::vector<std::uint8_t> cycle_parity(const Tessellation& t, const BoundaryCycle& c);

/// Mod-2 boundary of a facet set, per edge.
[[nodiscard]] std::vector<std::uint8_t> chain_boundary(const Tessellation& t,
                                                       std::span<const std::size_t> facets);

/// Sum of facet weights in increasing facet order.
[[nodiscard]] double chain_weight(const Tessellation& t, std::span<const std::size_t> facets);

enum class SurfaceSolver { automatic, branch_and_bound, min_cut };

[[nodiscard]] SurfaceSolver parse_surface_solver(const std::string& s);

struct SurfaceOptions {
  bool interior_only = false;  // when set, window facets are not eligible
  SurfaceSolver solver = SurfaceSolver::automatic;
  std::uint64_t node_limit = 50'000'000;
};

struct SurfaceChain {
  std::vector<std::size_t> facets;  // sorted
  double weight = 0.0;
  std::uint64_t nodes = 0;  // branch-and-bound nodes explored
  SurfaceSolver solved_by = SurfaceSolver::automatic;
};

/// Thrown when branch and bound hits its node limit; carries the best chain found.
class SolverTimeout : public Error {
 public:
  SolverTimeout(const std::string& what, SurfaceChain incumbent, bool has_incumbent)
      : Error(what), incumbent_(std::move(incumbent)), has_incumbent_(has_incumbent) {}
  [[nodiscard]] const SurfaceChain& incumbent() const { return incumbent_; }
  [[nodiscard]] bool has_incumbent() const { return has_incumbent_; }

 private:
  SurfaceChain incumbent_;
  bool has_incumbent_;
};

/// Minimum-weight facet set whose mod-2 boundary equals `parity`.
/// branch_and_bound is exact on any parity target. min_cut is exact when the
/// target lies on the window surface: the chain plus a window patch bounding the
/// same cycle encloses a cell set, so optimal chains are minimum s-t cuts in the
/// cell adjacency graph. automatic uses min_cut when it applies and falls back
/// to branch and bound otherwise.
[[nodiscard]] SurfaceChain min_weight_surface(const Tessellation& t,
                                              const std::vector<std::uint8_t>& parity,
                                              const SurfaceOptions& opts = {});

/// Members of the chain that are not window facets; these are what a crack
/// generator voxelises (window facets would paint the volume border).
[[nodiscard]] std::vector<std::size_t> interior_members(const Tessellation& t,
                                                        std::span<const std::size_t> facets);

/// Naive-plane voxelisation of the chain on a grid covering the window: voxel
/// centres within a half-open band of width ||n||_inf (n the unit normal in
/// voxel units) around each facet plane whose projection lies inside the facet.
/// Facet edges shared by two chain facets are widened by half a voxel diagonal
/// so folds leave no gaps.
[[nodiscard]] BinaryMask rasterize_surface(const Tessellation& t,
                                           std::span<const std::size_t> facets, const Dims& dims);

}  // namespace crackforge::cracksim
