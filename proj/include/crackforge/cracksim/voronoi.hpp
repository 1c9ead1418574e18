#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crackforge/cracksim/geometry.hpp"

namespace crackforge::cracksim {

/// Window faces in id order: x-lo, x-hi, y-lo, y-hi, z-lo, z-hi. Masks use bit (1 << id).
enum WindowFace : int { x_lo = 0, x_hi = 1, y_lo = 2, y_hi = 3, z_lo = 4, z_hi = 5 };

enum class WeightMode {
  geometric,        // facet area, edge length
  unit,             // every cell weighs 1
  randomized_mark,  // geometric times an independent U[0.5, 1.5) mark
};

[[nodiscard]] WeightMode parse_weight_mode(const std::string& s);
[[nodiscard]] std::string to_string(WeightMode m);

struct VoronoiParams {
  double intensity = 40.0;  // expected generators per unit volume
  Box window{};
  WeightMode weight_mode = WeightMode::geometric;
  std::uint64_t seed = 0;
};

struct TessVertex {
  Vec3 p;
  std::uint8_t window_mask = 0;  // window faces the vertex lies on
};

struct TessEdge {
  std::size_t a = 0, b = 0;  // a < b
  double length = 0.0;
  double weight = 0.0;  // see Tessellation: dyadic grid
  std::uint8_t window_mask = 0;  // faces containing the whole edge
  std::vector<std::size_t> facets;
};

struct TessFacet {
  std::vector<std::size_t> loop;   // vertex ids, cyclic
  std::vector<std::size_t> edges;  // edge ids, edges[k] joins loop[k] and loop[k+1]
  Vec3 normal;                     // unit, from cell_a towards cell_b (outward for window facets)
  double area = 0.0;
  double weight = 0.0;  // see Tessellation: dyadic grid
  std::int64_t cell_a = -1;
  std::int64_t cell_b = -1;  // -1 for window facets
  int window_face = -1;      // -1 for interior facets

  [[nodiscard]] bool interior() const { return window_face < 0; }
};

/// Voronoi cells of the generators clipped to the window, with a consistent
/// vertex / edge / facet cell complex shared between neighbouring cells.
/// Facet and edge weights are rounded to multiples of 2^(e - 50), where 2^e is
/// the leading power of two of the summed facet (resp. edge) weights. Sums of
/// weights are then exact, in any order.
struct Tessellation {
  Box window;
  std::vector<Vec3> generators;
  std::vector<TessVertex> vertices;
  std::vector<TessEdge> edges;
  std::vector<TessFacet> facets;
  std::vector<double> cell_volumes;
  std::vector<std::vector<std::size_t>> cell_facets;
  double tolerance = 0.0;  // vertex merge distance
};

/// Homogeneous Poisson process on the window: N ~ Poisson(intensity * |W|), then
/// uniform positions. Throws "empty tessellation" when no point is drawn.
[[nodiscard]] std::vector<Vec3> sample_poisson_points(const VoronoiParams& params);

[[nodiscard]] Tessellation build_voronoi(std::span<const Vec3> generators, const Box& window,
                                         WeightMode mode = WeightMode::geometric,
                                         std::uint64_t mark_seed = 0);

[[nodiscard]] Tessellation build_voronoi(const VoronoiParams& params);

/// Structural self-check: incidence symmetry, planarity, manifold edges,
/// non-negative weights, cell volumes that sum to the window volume. Returns a
/// list of human-readable problems (empty when consistent).
[[nodiscard]] std::vector<std::string> check_tessellation(const Tessellation& t);

}  // namespace crackforge::cracksim
