#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "crackforge/cracksim/crack_spec.hpp"
#include "crackforge/cracksim/dilation.hpp"
#include "crackforge/cracksim/fbm.hpp"
#include "crackforge/cracksim/surface.hpp"
#include "crackforge/cracksim/voronoi.hpp"
#include "crackforge/volcore/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace crackforge::cracksim {
namespace {

// ---- fractional Brownian surfaces ----------------------------------------

TEST(Fbm, ZeroAmplitudeRasterizesToPlane) {
  FbmParams p;
  p.amplitude = 0.0;
  p.grid_n = 16;
  const HeightField h = gen_fbm_height_field(p);
  for (double v : h.h) EXPECT_EQ(v, 0.0);
  const auto r = rasterize_height_field(h, {16, 16, 9}, 4.0);
  EXPECT_FALSE(r.clipped);
  EXPECT_EQ(count_foreground(r.mask), 256u);
  for (std::int64_t y = 0; y < 16; ++y) {
    for (std::int64_t x = 0; x < 16; ++x) EXPECT_EQ(r.mask(x, y, 4), 1);
  }
}

TEST(Fbm, DeterministicAndScaled) {
  FbmParams p;
  p.hurst = 0.5;
  p.grid_n = 32;
  p.amplitude = 3.0;
  p.seed = 11;
  const HeightField a = gen_fbm_height_field(p);
  const HeightField b = gen_fbm_height_field(p);
  EXPECT_EQ(a.h, b.h);
  const double mean = std::accumulate(a.h.begin(), a.h.end(), 0.0) / a.h.size();
  double var = 0.0;
  for (double v : a.h) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(var / a.h.size()), 3.0, 1e-9);
  p.seed = 12;
  EXPECT_NE(gen_fbm_height_field(p).h, a.h);
}

TEST(Fbm, InvalidParameters) {
  FbmParams p;
  p.hurst = 0.0;
  EXPECT_THROW((void)gen_fbm_height_field(p), ConfigError);
  p.hurst = 1.2;
  EXPECT_THROW((void)gen_fbm_height_field(p), ConfigError);
  p.hurst = 0.5;
  p.grid_n = 1;
  EXPECT_THROW((void)gen_fbm_height_field(p), ConfigError);
}

// Smaller version of the acceptance check: 12 seeds at 128^2.
TEST(Fbm, StructureFunctionSlopeTracksHurst) {
  for (double hurst : {0.3, 0.5, 0.8}) {
    std::vector<HeightField> fields;
    for (std::uint64_t s = 0; s < 12; ++s) {
      FbmParams p;
      p.hurst = hurst;
      p.grid_n = 128;
      p.amplitude = 1.0;
      p.seed = 100 + s;
      fields.push_back(gen_fbm_height_field(p));
    }
    const double slope = oracle::structure_slope(fields, 10);
    EXPECT_NEAR(slope, 2.0 * hurst, 0.2) << "H=" << hurst;
  }
}

TEST(Fbm, SmootherSurfaceForLargerHurst) {
  auto roughness = [](double hurst) {
    FbmParams p;
    p.hurst = hurst;
    p.grid_n = 64;
    p.amplitude = 1.0;
    p.seed = 5;
    return oracle::structure_function(gen_fbm_height_field(p), 1);
  };
  EXPECT_LT(roughness(0.97), roughness(0.3));
}

TEST(RasterizeHeightField, ConstantGivesSingleSlice) {
  HeightField h{8, std::vector<double>(64, 2.6)};
  const auto r = rasterize_height_field(h, {8, 8, 6});
  EXPECT_EQ(count_foreground(r.mask), 64u);
  for (std::int64_t y = 0; y < 8; ++y) {
    for (std::int64_t x = 0; x < 8; ++x) EXPECT_EQ(r.mask(x, y, 3), 1);
  }
}

TEST(RasterizeHeightField, RampHasNoGapsBetweenColumns) {
  const std::int64_t n = 12;
  HeightField h{n, std::vector<double>(n * n)};
  for (std::int64_t y = 0; y < n; ++y) {
    for (std::int64_t x = 0; x < n; ++x) h.at(x, y) = 2.0 * x + 0.3;
  }
  const auto r = rasterize_height_field(h, {n, n, 2 * n + 2});
  EXPECT_FALSE(r.clipped);
  auto column = [&](std::int64_t x, std::int64_t y) {
    std::set<std::int64_t> zs;
    for (std::int64_t z = 0; z < 2 * n + 2; ++z) {
      if (r.mask(x, y, z)) zs.insert(z);
    }
    return zs;
  };
  for (std::int64_t y = 0; y < n; ++y) {
    for (std::int64_t x = 0; x < n; ++x) {
      const auto zs = column(x, y);
      // contiguous run
      ASSERT_FALSE(zs.empty());
      EXPECT_EQ(static_cast<std::int64_t>(zs.size()), *zs.rbegin() - *zs.begin() + 1);
      if (x > 0 && x + 1 < n) {
        EXPECT_GE(zs.size(), 2u);
        EXPECT_LE(zs.size(), 3u);
      }
      for (auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
        if (x + dx >= n || y + dy >= n) continue;
        const auto nz = column(x + dx, y + dy);
        std::vector<std::int64_t> common;
        std::set_intersection(zs.begin(), zs.end(), nz.begin(), nz.end(),
                              std::back_inserter(common));
        EXPECT_FALSE(common.empty()) << "gap between (" << x << "," << y << ") and neighbour";
      }
    }
  }
}

TEST(RasterizeHeightField, ClippingIsFlagged) {
  HeightField h{4, std::vector<double>(16, 9.0)};
  const auto r = rasterize_height_field(h, {4, 4, 4});
  EXPECT_TRUE(r.clipped);
  EXPECT_EQ(count_foreground(r.mask), 0u);
  HeightField bad{4, std::vector<double>(16, std::nan(""))};
  EXPECT_THROW((void)rasterize_height_field(bad, {4, 4, 4}), Error);
}

TEST(CombineCracks, UnionProperties) {
  const BinaryMask a = testing::random_mask({9, 7, 5}, 1, 0.2);
  const BinaryMask b = testing::random_mask({9, 7, 5}, 2, 0.3);
  EXPECT_EQ(combine_cracks(std::vector<BinaryMask>{a}), a);
  BinaryMask na = a;
  for (auto& v : na.data()) v = v ? 0 : 1;
  EXPECT_EQ(count_foreground(combine_cracks(std::vector<BinaryMask>{a, na})), a.size());
  const BinaryMask u = combine_cracks(std::vector<BinaryMask>{a, b});
  EXPECT_LE(count_foreground(u), count_foreground(a) + count_foreground(b));
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], (a[i] | b[i]));
  EXPECT_THROW((void)combine_cracks(std::vector<BinaryMask>{a, BinaryMask({3, 3, 3})}), Error);
  EXPECT_THROW((void)combine_cracks(std::vector<BinaryMask>{}), Error);
}

// ---- Poisson-Voronoi -----------------------------------------------------

TEST(Poisson, MomentsMatchPoisson) {
  VoronoiParams p;
  p.intensity = 100.0;
  const int seeds = 1000;
  double s = 0, s2 = 0;
  for (int k = 0; k < seeds; ++k) {
    p.seed = static_cast<std::uint64_t>(k);
    const auto pts = sample_poisson_points(p);
    for (const Vec3& q : pts) {
      EXPECT_TRUE(q.x >= 0 && q.x <= 1 && q.y >= 0 && q.y <= 1 && q.z >= 0 && q.z <= 1);
    }
    s += pts.size();
    s2 += static_cast<double>(pts.size()) * pts.size();
  }
  const double mean = s / seeds;
  const double var = (s2 - seeds * mean * mean) / (seeds - 1);
  EXPECT_NEAR(mean, 100.0, 3.0 * std::sqrt(100.0 / seeds));
  // sd of the sample variance for a Poisson(100) sample: sqrt((mu + 2 mu^2) / n)
  EXPECT_NEAR(var, 100.0, 3.0 * std::sqrt((100.0 + 2.0 * 100.0 * 100.0) / seeds));
  p.seed = 3;
  const auto a = sample_poisson_points(p);
  const auto b = sample_poisson_points(p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Poisson, EmptyDrawIsAnError) {
  VoronoiParams p;
  p.intensity = 1e-9;
  EXPECT_THROW((void)sample_poisson_points(p), Error);
  p.intensity = -1.0;
  EXPECT_THROW((void)sample_poisson_points(p), ConfigError);
}

TEST(Voronoi, SinglePointIsTheWindow) {
  const std::vector<Vec3> g{{0.3, 0.4, 0.5}};
  const Tessellation t = build_voronoi(g, Box{{0, 0, 0}, {2, 1, 1}});
  EXPECT_EQ(t.facets.size(), 6u);
  EXPECT_EQ(t.edges.size(), 12u);
  EXPECT_EQ(t.vertices.size(), 8u);
  EXPECT_NEAR(t.cell_volumes[0], 2.0, 1e-12);
  EXPECT_TRUE(check_tessellation(t).empty());
  for (const TessFacet& f : t.facets) EXPECT_FALSE(f.interior());
}

TEST(Voronoi, TwoPointsShareOneBisector) {
  const std::vector<Vec3> g{{0.2, 0.3, 0.4}, {0.7, 0.6, 0.5}};
  const Tessellation t = build_voronoi(g, Box{});
  EXPECT_TRUE(check_tessellation(t).empty());
  int interior = 0;
  for (const TessFacet& f : t.facets) {
    if (!f.interior()) continue;
    ++interior;
    EXPECT_EQ(f.cell_a, 0);
    EXPECT_EQ(f.cell_b, 1);
    for (std::size_t v : f.loop) {
      const Vec3 p = t.vertices[v].p;
      EXPECT_NEAR(norm(p - g[0]), norm(p - g[1]), 1e-12);
    }
  }
  EXPECT_EQ(interior, 1);
  EXPECT_NEAR(t.cell_volumes[0] + t.cell_volumes[1], 1.0, 1e-12);
}

// Independent volume oracle: count lattice points by nearest generator.
TEST(Voronoi, CellVolumesMatchNearestGeneratorCounts) {
  VoronoiParams p;
  p.intensity = 12.0;
  p.seed = 4;
  const auto g = sample_poisson_points(p);
  const Tessellation t = build_voronoi(g, p.window);
  const int n = 60;
  std::vector<double> counts(g.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3 q{(i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n};
        std::size_t best = 0;
        for (std::size_t c = 1; c < g.size(); ++c) {
          if (norm(q - g[c]) < norm(q - g[best])) best = c;
        }
        counts[best] += 1.0;
      }
    }
  }
  for (std::size_t c = 0; c < g.size(); ++c) {
    EXPECT_NEAR(t.cell_volumes[c], counts[c] / (n * n * n), 0.01) << "cell " << c;
  }
}

TEST(Voronoi, SoundOverManySeeds) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::vector<Vec3> g(20);
    Rng rng(s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Vec3& q : g) q = {u(rng), 2.0 * u(rng), u(rng)};
    const Box w{{0, 0, 0}, {1, 2, 1}};
    const Tessellation t = build_voronoi(g, w);
    const auto problems = check_tessellation(t);
    EXPECT_TRUE(problems.empty()) << "seed " << s << ": " << problems.front();
    const double vol = std::accumulate(t.cell_volumes.begin(), t.cell_volumes.end(), 0.0);
    EXPECT_NEAR(vol / w.volume(), 1.0, 1e-6);
    for (const TessFacet& f : t.facets) {
      if (f.interior()) {
        EXPECT_GE(f.cell_a, 0);
        EXPECT_GT(f.cell_b, f.cell_a);
      }
    }
  }
}

TEST(Voronoi, WeightModes) {
  const std::vector<Vec3> g{{0.2, 0.3, 0.4}, {0.7, 0.6, 0.5}, {0.5, 0.1, 0.9}};
  const Tessellation geo = build_voronoi(g, Box{}, WeightMode::geometric);
  const Tessellation unit = build_voronoi(g, Box{}, WeightMode::unit);
  const Tessellation mark = build_voronoi(g, Box{}, WeightMode::randomized_mark, 9);
  ASSERT_EQ(geo.facets.size(), mark.facets.size());
  for (std::size_t f = 0; f < geo.facets.size(); ++f) {
    EXPECT_NEAR(geo.facets[f].weight, geo.facets[f].area, 1e-14);
    EXPECT_EQ(unit.facets[f].weight, 1.0);
    const double r = mark.facets[f].weight / mark.facets[f].area;
    EXPECT_GE(r, 0.5);
    EXPECT_LT(r, 1.5);
  }
  for (const TessEdge& e : geo.edges) EXPECT_NEAR(e.weight, e.length, 1e-14);
  EXPECT_EQ(parse_weight_mode("unit"), WeightMode::unit);
  EXPECT_THROW((void)parse_weight_mode("bogus"), ConfigError);
}

// Weight sums must not depend on summation order, or solvers and oracles that
// add in different orders would disagree on ties.
TEST(Voronoi, WeightSumsAreOrderIndependent) {
  VoronoiParams p;
  p.intensity = 60.0;
  p.seed = 12;
  for (WeightMode mode : {WeightMode::geometric, WeightMode::randomized_mark}) {
    p.weight_mode = mode;
    const Tessellation t = build_voronoi(p);
    std::vector<double> w;
    for (const TessFacet& f : t.facets) w.push_back(f.weight);
    const double fwd = std::accumulate(w.begin(), w.end(), 0.0);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(w.begin(), w.end(), rng);
      EXPECT_EQ(std::accumulate(w.begin(), w.end(), 0.0), fwd);
    }
    double area = 0.0;
    for (const TessFacet& f : t.facets) area += f.area;
    EXPECT_NEAR(fwd, mode == WeightMode::geometric ? area : fwd, 1e-9);
  }
}

// ---- boundary cycles -----------------------------------------------------

void expect_closed_and_disjoint(const Tessellation& t, const BoundaryCycle& c) {
  std::set<std::size_t> seen;
  std::map<std::size_t, int> degree;
  for (std::size_t e : c.edges) {
    EXPECT_TRUE(seen.insert(e).second) << "edge used twice";
    ++degree[t.edges[e].a];
    ++degree[t.edges[e].b];
  }
  for (const auto& [v, d] : degree) EXPECT_EQ(d % 2, 0) << "open at vertex " << v;
  for (std::size_t a : c.anchors) EXPECT_GT(degree[a], 0);
}

TEST(BoundaryCycle, SinglePointWindow) {
  const std::vector<Vec3> g{{0.5, 0.5, 0.5}};
  const Tessellation t = build_voronoi(g, Box{});
  for (std::uint64_t s = 0; s < 8; ++s) {
    const BoundaryCycle c = boundary_cycle(t, s);
    expect_closed_and_disjoint(t, c);
    for (std::size_t e : c.edges) EXPECT_NE(t.edges[e].window_mask & 0x0F, 0);
  }
}

TEST(BoundaryCycle, ClosedOnRandomTessellations) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    VoronoiParams p;
    p.intensity = 30.0;
    p.seed = s;
    const Tessellation t = build_voronoi(p);
    const BoundaryCycle c = boundary_cycle(t, s + 100);
    expect_closed_and_disjoint(t, c);
    const BoundaryCycle c2 = boundary_cycle(t, s + 100);
    EXPECT_EQ(c.edges, c2.edges);
    EXPECT_EQ(c.anchors, c2.anchors);
  }
}

TEST(BoundaryCycle, DijkstraBeatsEveryEnumeratedPath) {
  std::size_t compared = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    VoronoiParams p;
    p.intensity = 3.0;
    p.seed = s;
    Tessellation t;
    try {
      t = build_voronoi(p);
    } catch (const Error&) {
      continue;
    }
    for (int face = 0; face < 6; ++face) {
      std::vector<std::size_t> on_face, verts;
      for (std::size_t e = 0; e < t.edges.size(); ++e) {
        if ((t.edges[e].window_mask >> face) & 1u) on_face.push_back(e);
      }
      if (on_face.size() > 10) continue;
      for (std::size_t v = 0; v < t.vertices.size(); ++v) {
        if ((t.vertices[v].window_mask >> face) & 1u) verts.push_back(v);
      }
      auto accept = [&](std::size_t e) { return ((t.edges[e].window_mask >> face) & 1u) != 0; };
      for (std::size_t i = 0; i < verts.size(); ++i) {
        for (std::size_t j = i + 1; j < verts.size(); ++j) {
          const auto path = face_shortest_path(t, face, verts[i], verts[j], {}, true);
          double w = 0.0;
          for (std::size_t e : path) w += t.edges[e].weight;
          const double best = oracle::enumerate_min_path(t, verts[i], verts[j], accept);
          EXPECT_LE(w, best + 1e-12);
          EXPECT_NEAR(w, best, 1e-12);
          ++compared;
        }
      }
    }
  }
  EXPECT_GT(compared, 50u);
}

// ---- minimum-weight surfaces ----------------------------------------------

Tessellation tiny_tessellation(std::uint64_t seed, std::size_t points) {
  std::vector<Vec3> g(points);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (Vec3& q : g) q = {u(rng), u(rng), u(rng)};
  return build_voronoi(g, Box{});
}

TEST(MinWeightSurface, EmptyCycleGivesEmptyChain) {
  const Tessellation t = tiny_tessellation(1, 4);
  const std::vector<std::uint8_t> zero(t.edges.size(), 0);
  for (auto solver : {SurfaceSolver::branch_and_bound, SurfaceSolver::automatic}) {
    SurfaceOptions o;
    o.solver = solver;
    const SurfaceChain c = min_weight_surface(t, zero, o);
    EXPECT_TRUE(c.facets.empty());
    EXPECT_EQ(c.weight, 0.0);
  }
}

TEST(MinWeightSurface, SingleFacetBoundaryMatchesExhaustiveSearch) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tessellation t = tiny_tessellation(s, 2 + s % 2);
    ASSERT_LE(t.facets.size(), 20u);
    const std::size_t f0 = s % t.facets.size();
    const auto parity = chain_boundary(t, std::vector<std::size_t>{f0});
    const auto ref = oracle::exhaustive_min_chain(t, parity, false);
    ASSERT_TRUE(ref.feasible);
    SurfaceOptions o;
    o.interior_only = false;
    o.solver = SurfaceSolver::branch_and_bound;
    const SurfaceChain c = min_weight_surface(t, parity, o);
    EXPECT_EQ(c.facets, ref.facets) << "seed " << s;
    EXPECT_EQ(c.weight, ref.weight);
    EXPECT_EQ(chain_boundary(t, c.facets), parity);
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(MinWeightSurface, WindowCycleSolversAgreeWithExhaustiveSearch) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tessellation t = tiny_tessellation(100 + s, 3);
    ASSERT_LE(t.facets.size(), 24u);
    const BoundaryCycle cyc = boundary_cycle(t, s);
    const auto parity = cycle_parity(t, cyc);
    for (bool interior_only : {true, false}) {
      const auto ref = oracle::exhaustive_min_chain(t, parity, interior_only);
      for (auto solver : {SurfaceSolver::branch_and_bound, SurfaceSolver::min_cut}) {
        SurfaceOptions o;
        o.interior_only = interior_only;
        o.solver = solver;
        if (!ref.feasible) {
          EXPECT_THROW((void)min_weight_surface(t, parity, o), Error);
          continue;
        }
        const SurfaceChain c = min_weight_surface(t, parity, o);
        EXPECT_EQ(chain_boundary(t, c.facets), parity);
        // optima can tie (e.g. two window patches of equal area), so compare weights
        EXPECT_EQ(c.weight, ref.weight) << "seed " << s << " interior_only " << interior_only;
      }
    }
  }
}

TEST(MinWeightSurface, ScalingWeightsKeepsArgmin) {
  Tessellation t = tiny_tessellation(7, 3);
  const auto parity = cycle_parity(t, boundary_cycle(t, 3));
  SurfaceOptions o;
  o.solver = SurfaceSolver::branch_and_bound;
  const SurfaceChain a = min_weight_surface(t, parity, o);
  for (TessFacet& f : t.facets) f.weight *= 2.0;
  const SurfaceChain b = min_weight_surface(t, parity, o);
  EXPECT_EQ(a.facets, b.facets);
  EXPECT_DOUBLE_EQ(b.weight, 2.0 * a.weight);
}

TEST(MinWeightSurface, InfeasibleAndTimeout) {
  const Tessellation one = build_voronoi(std::vector<Vec3>{{0.5, 0.5, 0.5}}, Box{});
  const auto parity = cycle_parity(one, boundary_cycle(one, 0));
  SurfaceOptions interior;
  interior.interior_only = true;
  EXPECT_THROW((void)min_weight_surface(one, parity, interior), Error);

  VoronoiParams p;
  p.intensity = 60.0;
  p.seed = 2;
  const Tessellation t = build_voronoi(p);
  const auto par = cycle_parity(t, boundary_cycle(t, 1));
  SurfaceOptions o;
  o.solver = SurfaceSolver::branch_and_bound;
  o.node_limit = 50;
  EXPECT_THROW((void)min_weight_surface(t, par, o), SolverTimeout);
}

TEST(MinWeightSurface, BranchAndBoundMatchesMinCutAtDeskScale) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    VoronoiParams p;
    p.intensity = 8.0;
    p.seed = 40 + s;
    const Tessellation t = build_voronoi(p);
    const auto parity = cycle_parity(t, boundary_cycle(t, s));
    SurfaceOptions bb;
    bb.solver = SurfaceSolver::branch_and_bound;
    SurfaceOptions mc;
    mc.solver = SurfaceSolver::min_cut;
    const SurfaceChain a = min_weight_surface(t, parity, bb);
    const SurfaceChain b = min_weight_surface(t, parity, mc);
    EXPECT_NEAR(a.weight, b.weight, 1e-12 * (1.0 + a.weight)) << "seed " << s;
    EXPECT_EQ(chain_boundary(t, b.facets), parity);
  }
}

// ---- rasterization -------------------------------------------------------

TEST(RasterizeSurface, AxisAlignedFacetIsFlatRectangle) {
  const std::vector<Vec3> g{{0.5, 0.5, 0.25}, {0.5, 0.5, 0.75}};
  const Tessellation t = build_voronoi(g, Box{});
  std::vector<std::size_t> chain;
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    if (t.facets[f].interior()) chain.push_back(f);
  }
  ASSERT_EQ(chain.size(), 1u);
  const BinaryMask m = rasterize_surface(t, chain, {16, 12, 16});
  EXPECT_EQ(count_foreground(m), 16u * 12u);
  for (std::int64_t y = 0; y < 12; ++y) {
    for (std::int64_t x = 0; x < 16; ++x) EXPECT_EQ(m(x, y, 7), 1);
  }
  EXPECT_EQ(count_foreground(rasterize_surface(t, {}, {8, 8, 8})), 0u);
}

// The interior facets of a chain separate the cells into sides (components of
// the cell graph with chain facets removed). Brute force over all 6-adjacent
// voxel pairs: no unset pair may have its centres in cells on different sides.
TEST(RasterizeSurface, NoThroughGapsAcrossTheSurface) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    VoronoiParams p;
    p.intensity = 30.0;
    p.seed = 10 + s;
    const Tessellation t = build_voronoi(p);
    const BoundaryCycle cyc = boundary_cycle(t, s);
    const SurfaceChain c = min_weight_surface(t, cycle_parity(t, cyc), {});
    const auto members = interior_members(t, c.facets);
    ASSERT_FALSE(members.empty());
    const Dims d{32, 32, 32};
    const BinaryMask m = rasterize_surface(t, members, d);

    const std::size_t nc = t.generators.size();
    std::vector<std::size_t> side(nc);
    std::iota(side.begin(), side.end(), 0);
    auto find = [&](std::size_t x) {
      while (side[x] != x) x = side[x] = side[side[x]];
      return x;
    };
    const std::set<std::size_t> in_chain(members.begin(), members.end());
    for (std::size_t f = 0; f < t.facets.size(); ++f) {
      const TessFacet& tf = t.facets[f];
      if (!tf.interior() || in_chain.count(f)) continue;
      side[find(static_cast<std::size_t>(tf.cell_a))] = find(static_cast<std::size_t>(tf.cell_b));
    }
    std::vector<std::size_t> label(d.voxels());
    for (std::int64_t z = 0; z < d.nz; ++z) {
      for (std::int64_t y = 0; y < d.ny; ++y) {
        for (std::int64_t x = 0; x < d.nx; ++x) {
          const Vec3 q{(x + 0.5) / d.nx, (y + 0.5) / d.ny, (z + 0.5) / d.nz};
          std::size_t best = 0;
          for (std::size_t g = 1; g < nc; ++g) {
            if (norm(q - t.generators[g]) < norm(q - t.generators[best])) best = g;
          }
          label[static_cast<std::size_t>(m.index(x, y, z))] = find(best);
        }
      }
    }
    std::size_t straddling = 0, gaps = 0;
    for (std::int64_t z = 0; z < d.nz; ++z) {
      for (std::int64_t y = 0; y < d.ny; ++y) {
        for (std::int64_t x = 0; x < d.nx; ++x) {
          const auto i = static_cast<std::size_t>(m.index(x, y, z));
          for (int a = 0; a < 3; ++a) {
            const std::int64_t xx = x + (a == 0), yy = y + (a == 1), zz = z + (a == 2);
            if (!m.contains(xx, yy, zz)) continue;
            const auto j = static_cast<std::size_t>(m.index(xx, yy, zz));
            if (label[i] == label[j]) continue;
            ++straddling;
            if (!m[i] && !m[j]) ++gaps;
          }
        }
      }
    }
    EXPECT_GT(straddling, 0u);
    EXPECT_EQ(gaps, 0u) << "seed " << s;
  }
}

// ---- dilation -------------------------------------------------------------

TEST(DilationProfile, IncrementsAndBinomialMoments) {
  const int seeds = 1000;
  double s = 0, s2 = 0;
  for (int k = 0; k < seeds; ++k) {
    const auto prof = draw_dilation_profile(16, 0.5, static_cast<std::uint64_t>(k));
    EXPECT_EQ(prof.counts[0], 0);
    for (std::size_t i = 1; i < prof.counts.size(); ++i) {
      const auto d = prof.counts[i] - prof.counts[i - 1];
      EXPECT_TRUE(d == 0 || d == 1);
    }
    s += prof.counts[10];
    s2 += static_cast<double>(prof.counts[10] * prof.counts[10]);
  }
  const double mean = s / seeds;
  const double var = (s2 - seeds * mean * mean) / (seeds - 1);
  EXPECT_NEAR(mean, 5.0, 3.0 * std::sqrt(2.5 / seeds));
  // fourth central moment of Binomial(10, 1/2), for the sd of the sample variance
  const double mu4 = 10 * 0.25 * (1 + 3 * (10 - 2) * 0.25);
  EXPECT_NEAR(var, 2.5, 3.0 * std::sqrt((mu4 - 2.5 * 2.5 * (seeds - 3.0) / (seeds - 1.0)) / seeds));
  EXPECT_THROW((void)draw_dilation_profile(4, 0.0, 1), ConfigError);
  EXPECT_THROW((void)draw_dilation_profile(4, 1.0, 1), ConfigError);
}

TEST(AdaptiveDilate, ZeroProfileIsIdentity) {
  const BinaryMask m = testing::random_mask({8, 9, 10}, 3, 0.05);
  DilationProfile zero{0.1, 0, std::vector<std::int64_t>(8, 0)};
  EXPECT_EQ(dilate_slices(m, zero), m);
}

TEST(AdaptiveDilate, ConstantCountGrowsIsolatedPixel) {
  for (std::int64_t k : {1, 2, 4}) {
    BinaryMask m({5, 14, 14}, 0);
    m(2, 3, 4) = 1;
    DilationProfile prof{0.5, 0, std::vector<std::int64_t>(5, k)};
    const BinaryMask tl = dilate_slices(m, prof, Anchor::top_left);
    // brute force: (k+1)^2 block in y, z starting at the pixel
    for (std::int64_t z = 0; z < 14; ++z) {
      for (std::int64_t y = 0; y < 14; ++y) {
        for (std::int64_t x = 0; x < 5; ++x) {
          const bool want = x == 2 && y >= 3 && y <= 3 + k && z >= 4 && z <= 4 + k;
          EXPECT_EQ(tl(x, y, z), want ? 1 : 0);
        }
      }
    }
    BinaryMask c({5, 14, 14}, 0);
    c(2, 9, 10) = 1;
    const BinaryMask br = dilate_slices(c, prof, Anchor::bottom_right);
    EXPECT_EQ(br(2, 9 - k, 10 - k), 1);
    EXPECT_EQ(br(2, 9 + 1, 10), 0);
    EXPECT_EQ(count_foreground(br), static_cast<std::size_t>((k + 1) * (k + 1)));
  }
}

TEST(AdaptiveDilate, Extensive) {
  const BinaryMask m = testing::random_mask({20, 10, 10}, 9, 0.03);
  const auto r = adaptive_dilate(m, 0.3, 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) { EXPECT_EQ(r.mask[i], 1); }
  }
  EXPECT_EQ(r.profile.counts.size(), 20u);
}

TEST(FixedWidth, ChebyshevThickness) {
  BinaryMask m({9, 9, 9}, 0);
  m(4, 4, 4) = 1;
  EXPECT_EQ(dilate_fixed_width(m, 1), m);
  EXPECT_EQ(count_foreground(dilate_fixed_width(m, 2)), 8u);
  EXPECT_EQ(count_foreground(dilate_fixed_width(m, 3)), 27u);
  EXPECT_EQ(count_foreground(dilate_fixed_width(m, 5)), 125u);
  EXPECT_THROW((void)dilate_fixed_width(m, 0), ConfigError);

  BinaryMask plane({6, 6, 11}, 0);
  for (std::int64_t y = 0; y < 6; ++y) {
    for (std::int64_t x = 0; x < 6; ++x) plane(x, y, 5) = 1;
  }
  for (int w : {1, 2, 3, 4, 5}) {
    EXPECT_EQ(count_foreground(dilate_fixed_width(plane, w)), 36u * static_cast<std::size_t>(w));
  }
}

// ---- crack specs -----------------------------------------------------------

TEST(CrackSpec, JsonRoundTripAndValidation) {
  const auto j = nlohmann::json::parse(R"({"model":"voronoi","dims":[16,16,16],"intensity":25,
    "window":[1,1,1],"weight_mode":"unit","dilation":{"fixed_width":[1,3,5]},"count":2,"seed":7})");
  const CrackSpec s = CrackSpec::from_json(j);
  EXPECT_EQ(s.model, CrackModel::voronoi);
  EXPECT_EQ(s.widths, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(s.total_masks(), 6);
  const CrackSpec back = CrackSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  const auto plan = plan_masks(s);
  ASSERT_EQ(plan.size(), 6u);
  EXPECT_EQ(plan[0].width, 1);
  EXPECT_EQ(plan[5].width, 5);
  std::set<std::uint64_t> seeds;
  for (const auto& m : plan) seeds.insert(m.seed);
  EXPECT_EQ(seeds.size(), 6u);

  EXPECT_THROW((void)CrackSpec::from_json(nlohmann::json::parse(R"({"dilation":{"fixed_width":0}})")),
               ConfigError);
  EXPECT_THROW((void)CrackSpec::from_json(nlohmann::json::parse(R"({"model":"nope"})")), ConfigError);
  EXPECT_THROW((void)CrackSpec::from_json(nlohmann::json::parse(R"({"dilation":{"p":1.5}})")),
               ConfigError);
}

TEST(CrackSpec, GenerationIsDeterministic) {
  CrackSpec s;
  s.dims = {24, 24, 24};
  s.amplitude = 2.0;
  const auto a = generate_crack(s, 3, 42);
  const auto b = generate_crack(s, 3, 42);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_GT(count_foreground(a.mask), 24u * 24u * 2u);
  s.model = CrackModel::voronoi;
  s.intensity = 30.0;
  const auto c = generate_crack(s, 1, 5);
  const auto d = generate_crack(s, 1, 5);
  EXPECT_EQ(c.mask, d.mask);
  EXPECT_GE(count_foreground(c.mask), 24u * 24u);
  s.dilation_p = 0.1;
  const auto e = generate_crack(s, 0, 5);
  ASSERT_TRUE(e.profile.has_value());
  for (std::size_t i = 0; i < c.mask.size(); ++i) {
    if (c.mask[i]) { EXPECT_EQ(e.mask[i], 1); }
  }
}

TEST(CrackSpec, CrossingCracksAndTwoDimensionalSurfaces) {
  CrackSpec s;
  s.dims = {20, 20, 20};
  s.cracks_per_image = 2;
  const auto r = generate_crack(s, 1, 3);
  CrackSpec one = s;
  one.cracks_per_image = 1;
  const auto q = generate_crack(one, 1, 3);
  for (std::size_t i = 0; i < q.mask.size(); ++i) {
    if (q.mask[i]) { EXPECT_EQ(r.mask[i], 1); }
  }
  EXPECT_GT(count_foreground(r.mask), count_foreground(q.mask));
  CrackSpec flat;
  flat.dims = {32, 32, 1};
  flat.amplitude = 2.0;
  const auto f = generate_crack(flat, 1, 1);
  EXPECT_GE(count_foreground(f.mask), 32u);
}

}  // namespace
}  // namespace crackforge::cracksim
