#include "crackforge/cracksim/voronoi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "crackforge/volcore/grid.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge::cracksim {

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "geometric" || s == "area") return WeightMode::geometric;
  if (s == "unit") return WeightMode::unit;
  if (s == "randomized_mark" || s == "random") return WeightMode::randomized_mark;
  throw ConfigError("unknown weight mode: " + s);
}

std::string to_string(WeightMode m) {
  switch (m) {
    case WeightMode::geometric: return "geometric";
    case WeightMode::unit: return "unit";
    case WeightMode::randomized_mark: return "randomized_mark";
  }
  return "geometric";
}

std::vector<Vec3> sample_poisson_points(const VoronoiParams& p) {
  if (!p.window.valid()) throw ConfigError("voronoi window must have positive extent");
  if (!(p.intensity > 0.0)) throw ConfigError("voronoi intensity must be positive");
  Rng rng(p.seed);
  std::poisson_distribution<std::int64_t> count(p.intensity * p.window.volume());
  const std::int64_t n = count(rng);
  if (n == 0) throw Error("empty tessellation");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 e = p.window.extent();
  std::vector<Vec3> pts(static_cast<std::size_t>(n));
  for (Vec3& q : pts) {
    q.x = p.window.lo.x + e.x * u(rng);
    q.y = p.window.lo.y + e.y * u(rng);
    q.z = p.window.lo.z + e.z * u(rng);
  }
  return pts;
}

namespace {

// Face of a cell polytope, counter-clockwise seen from outside.
// tag >= 0: neighbouring generator, tag < 0: window face -(tag + 1).
struct Poly {
  std::vector<Vec3> pts;
  std::int64_t tag;
};

using Cell = std::vector<Poly>;

Cell box_cell(const Box& b) {
  const Vec3 l = b.lo, h = b.hi;
  auto P = [&](int ix, int iy, int iz) {
    return Vec3{ix ? h.x : l.x, iy ? h.y : l.y, iz ? h.z : l.z};
  };
  Cell c;
  c.push_back({{P(0, 0, 0), P(0, 0, 1), P(0, 1, 1), P(0, 1, 0)}, -1});  // x-lo, normal -x
  c.push_back({{P(1, 0, 0), P(1, 1, 0), P(1, 1, 1), P(1, 0, 1)}, -2});  // x-hi
  c.push_back({{P(0, 0, 0), P(1, 0, 0), P(1, 0, 1), P(0, 0, 1)}, -3});  // y-lo
  c.push_back({{P(0, 1, 0), P(0, 1, 1), P(1, 1, 1), P(1, 1, 0)}, -4});  // y-hi
  c.push_back({{P(0, 0, 0), P(0, 1, 0), P(1, 1, 0), P(1, 0, 0)}, -5});  // z-lo
  c.push_back({{P(0, 0, 1), P(1, 0, 1), P(1, 1, 1), P(0, 1, 1)}, -6});  // z-hi
  return c;
}

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
}

// Intersection of segment pq with n.x = c, evaluated from a canonical endpoint
// so both cells sharing the segment get bit-identical points.
Vec3 intersect(Vec3 p, double dp, Vec3 q, double dq) {
  if (lex_less(q, p)) {
    std::swap(p, q);
    std::swap(dp, dq);
  }
  const double t = dp / (dp - dq);
  return p + t * (q - p);
}

void drop_repeats(std::vector<Vec3>& pts, double tol) {
  std::vector<Vec3> out;
  for (const Vec3& p : pts) {
    if (out.empty() || norm(p - out.back()) > tol) out.push_back(p);
  }
  while (out.size() > 1 && norm(out.front() - out.back()) <= tol) out.pop_back();
  pts = std::move(out);
}

// Keeps the part of the cell with n.x <= c and closes it with a new face.
void clip(Cell& cell, Vec3 n, double c, std::int64_t tag, double eps) {
  std::vector<Vec3> cut;
  Cell kept;
  bool any_cut = false;
  for (Poly& f : cell) {
    const std::size_t m = f.pts.size();
    std::vector<double> d(m);
    bool all_in = true, all_out = true;
    for (std::size_t i = 0; i < m; ++i) {
      d[i] = dot(n, f.pts[i]) - c;
      if (d[i] > eps) all_in = false;
      else all_out = false;
    }
    if (all_in) {
      for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(d[i]) <= eps) cut.push_back(f.pts[i]);
      }
      kept.push_back(std::move(f));
      continue;
    }
    any_cut = true;
    if (all_out) continue;
    Poly g{{}, f.tag};
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = (i + 1) % m;
      const bool in_i = d[i] <= eps, in_j = d[j] <= eps;
      if (in_i) {
        g.pts.push_back(f.pts[i]);
        if (std::abs(d[i]) <= eps) cut.push_back(f.pts[i]);
      }
      if (in_i != in_j && std::abs(d[i]) > eps && std::abs(d[j]) > eps) {
        const Vec3 x = intersect(f.pts[i], d[i], f.pts[j], d[j]);
        g.pts.push_back(x);
        cut.push_back(x);
      }
    }
    drop_repeats(g.pts, eps);
    if (g.pts.size() >= 3) kept.push_back(std::move(g));
  }
  cell = std::move(kept);
  if (!any_cut || cut.size() < 3) return;

  // order the cut polygon counter-clockwise around n
  Vec3 centre{};
  for (const Vec3& p : cut) centre = centre + p;
  centre = (1.0 / static_cast<double>(cut.size())) * centre;
  const Vec3 nu = (1.0 / norm(n)) * n;
  Vec3 helper = std::abs(nu.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 u = cross(nu, helper);
  u = (1.0 / norm(u)) * u;
  const Vec3 v = cross(nu, u);
  std::vector<std::pair<double, Vec3>> ang;
  ang.reserve(cut.size());
  for (const Vec3& p : cut) {
    const Vec3 r = p - centre;
    ang.emplace_back(std::atan2(dot(r, v), dot(r, u)), p);
  }
  std::sort(ang.begin(), ang.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Poly face{{}, tag};
  for (const auto& [a, p] : ang) face.pts.push_back(p);
  drop_repeats(face.pts, eps);
  if (face.pts.size() >= 3) cell.push_back(std::move(face));
}

Vec3 newell(const std::vector<Vec3>& pts) {
  Vec3 n{};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = pts[(i + 1) % pts.size()];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

double cell_volume(const Cell& c, Vec3 origin) {
  double v = 0.0;
  for (const Poly& f : c) {
    const Vec3 p0 = f.pts[0] - origin;
    for (std::size_t k = 1; k + 1 < f.pts.size(); ++k) {
      v += dot(p0, cross(f.pts[k] - origin, f.pts[k + 1] - origin));
    }
  }
  return v / 6.0;
}

class VertexIndex {
 public:
  explicit VertexIndex(double tol) : tol_(tol) {}

  std::size_t id(const Vec3& p, std::vector<TessVertex>& verts) {
    const auto k = key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == grid_.end()) continue;
          for (std::size_t v : it->second) {
            if (norm(verts[v].p - p) <= tol_) return v;
          }
        }
      }
    }
    verts.push_back({p, 0});
    grid_[k].push_back(verts.size() - 1);
    return verts.size() - 1;
  }

 private:
  using Key = std::array<std::int64_t, 3>;
  Key key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / tol_)),
            static_cast<std::int64_t>(std::floor(p.y / tol_)),
            static_cast<std::int64_t>(std::floor(p.z / tol_))};
  }
  double tol_;
  std::map<Key, std::vector<std::size_t>> grid_;
};

// Rounds weights to multiples of q = 2^(ilogb(total) - 50), total being the
// sum of all weights. Every subset sum then stays below 2^53 q and is exact,
// so chain and path weights do not depend on summation order.
template <typename Items>
void snap_weights(Items& items) {
  double total = 0.0;
  for (const auto& it : items) total += it.weight;
  if (total <= 0.0 || !std::isfinite(total)) return;
  const int e = std::ilogb(total) - 50;
  for (auto& it : items) it.weight = std::ldexp(std::nearbyint(std::ldexp(it.weight, -e)), e);
}

}  // namespace

Tessellation build_voronoi(std::span<const Vec3> gens, const Box& window, WeightMode mode,
                           std::uint64_t mark_seed) {
  if (!window.valid()) throw ConfigError("voronoi window must have positive extent");
  if (gens.empty()) throw Error("voronoi: no generators");
  const double diam = window.diameter();
  const double eps = 1e-12 * diam;
  Tessellation t;
  t.window = window;
  t.generators.assign(gens.begin(), gens.end());
  t.tolerance = 1e-9 * diam;
  const std::size_t n = gens.size();

  std::vector<Cell> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 gi = gens[i];
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.emplace_back(norm(gens[j] - gi), j);
    }
    std::sort(order.begin(), order.end());
    Cell c = box_cell(window);
    for (const auto& [dist, j] : order) {
      double reach = 0.0;
      for (const Poly& f : c) {
        for (const Vec3& p : f.pts) reach = std::max(reach, norm(p - gi));
      }
      if (0.5 * dist > reach + eps) break;
      const Vec3 nrm = gens[j] - gi;
      if (norm(nrm) <= eps) continue;  // coincident generators
      const double off = 0.5 * (dot(gens[j], gens[j]) - dot(gi, gi));
      clip(c, nrm, off, static_cast<std::int64_t>(j), eps * (1.0 + norm(nrm)));
    }
    cells[i] = std::move(c);
  }

  // global vertices
  VertexIndex vindex(t.tolerance);
  const auto face_plane = [&](int f) {
    const int axis = f / 2;
    return (f % 2 == 0) ? window.lo[axis] : window.hi[axis];
  };

  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> facet_key;
  t.cell_facets.assign(n, {});
  t.cell_volumes.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.cell_volumes[i] = cell_volume(cells[i], gens[i]);
    for (const Poly& f : cells[i]) {
      std::pair<std::int64_t, std::int64_t> key;
      bool reverse = false;
      int wface = -1;
      std::int64_t a = static_cast<std::int64_t>(i), b = -1;
      if (f.tag >= 0) {
        a = std::min<std::int64_t>(static_cast<std::int64_t>(i), f.tag);
        b = std::max<std::int64_t>(static_cast<std::int64_t>(i), f.tag);
        key = {a, b};
        reverse = static_cast<std::int64_t>(i) != a;
      } else {
        wface = static_cast<int>(-(f.tag + 1));
        key = {static_cast<std::int64_t>(i), -1 - wface};
      }
      auto it = facet_key.find(key);
      if (it != facet_key.end()) {
        t.cell_facets[i].push_back(it->second);
        continue;
      }
      std::vector<Vec3> pts = f.pts;
      if (reverse) std::reverse(pts.begin(), pts.end());
      TessFacet tf;
      for (const Vec3& p : pts) {
        const std::size_t v = vindex.id(p, t.vertices);
        if (!tf.loop.empty() && tf.loop.back() == v) continue;
        tf.loop.push_back(v);
      }
      while (tf.loop.size() > 1 && tf.loop.front() == tf.loop.back()) tf.loop.pop_back();
      if (tf.loop.size() < 3) continue;
      std::vector<Vec3> merged;
      for (std::size_t v : tf.loop) merged.push_back(t.vertices[v].p);
      const Vec3 nn = newell(merged);
      tf.area = 0.5 * norm(nn);
      if (tf.area <= 1e-10 * diam * diam) continue;
      tf.normal = (1.0 / norm(nn)) * nn;
      tf.cell_a = a;
      tf.cell_b = b;
      tf.window_face = wface;
      t.facets.push_back(std::move(tf));
      facet_key.emplace(key, t.facets.size() - 1);
      t.cell_facets[i].push_back(t.facets.size() - 1);
    }
  }
  // cells that only reference a shared facet from the other side
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    const TessFacet& tf = t.facets[f];
    for (std::int64_t c : {tf.cell_a, tf.cell_b}) {
      if (c < 0) continue;
      auto& lst = t.cell_facets[static_cast<std::size_t>(c)];
      if (std::find(lst.begin(), lst.end(), f) == lst.end()) lst.push_back(f);
    }
  }
  for (auto& lst : t.cell_facets) std::sort(lst.begin(), lst.end());

  for (TessVertex& v : t.vertices) {
    for (int f = 0; f < 6; ++f) {
      if (std::abs(v.p[f / 2] - face_plane(f)) <= t.tolerance) {
        v.window_mask = static_cast<std::uint8_t>(v.window_mask | (1u << f));
      }
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_key;
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    TessFacet& tf = t.facets[f];
    const std::size_t m = tf.loop.size();
    tf.edges.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t a = tf.loop[k], b = tf.loop[(k + 1) % m];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = edge_key.emplace(std::make_pair(a, b), t.edges.size());
      if (inserted) {
        TessEdge e;
        e.a = a;
        e.b = b;
        e.length = norm(t.vertices[a].p - t.vertices[b].p);
        e.window_mask = t.vertices[a].window_mask & t.vertices[b].window_mask;
        t.edges.push_back(std::move(e));
      }
      tf.edges[k] = it->second;
      t.edges[it->second].facets.push_back(f);
    }
  }

  Rng rng(mark_seed);
  std::uniform_real_distribution<double> mark(0.5, 1.5);
  for (TessFacet& f : t.facets) {
    f.weight = mode == WeightMode::unit ? 1.0 : f.area;
    if (mode == WeightMode::randomized_mark) f.weight *= mark(rng);
  }
  for (TessEdge& e : t.edges) {
    e.weight = mode == WeightMode::unit ? 1.0 : e.length;
    if (mode == WeightMode::randomized_mark) e.weight *= mark(rng);
  }
  snap_weights(t.facets);
  snap_weights(t.edges);
  return t;
}

Tessellation build_voronoi(const VoronoiParams& params) {
  const auto pts = sample_poisson_points(params);
  return build_voronoi(pts, params.window, params.weight_mode, split_seed(params.seed, 1));
}

std::vector<std::string> check_tessellation(const Tessellation& t) {
  std::vector<std::string> problems;
  auto report = [&](const std::string& s) {
    if (problems.size() < 50) problems.push_back(s);
  };
  const double diam = t.window.diameter();

  // facets: planarity, edge/loop agreement, cell references
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    const TessFacet& tf = t.facets[f];
    if (tf.loop.size() < 3) report("facet " + std::to_string(f) + " has fewer than 3 vertices");
    if (tf.edges.size() != tf.loop.size()) report("facet " + std::to_string(f) + " edge count");
    const Vec3 p0 = t.vertices[tf.loop[0]].p;
    for (std::size_t v : tf.loop) {
      if (std::abs(dot(tf.normal, t.vertices[v].p - p0)) > 1e-7 * diam) {
        report("facet " + std::to_string(f) + " is not planar");
        break;
      }
    }
    for (std::size_t k = 0; k < tf.edges.size(); ++k) {
      const TessEdge& e = t.edges[tf.edges[k]];
      std::size_t a = tf.loop[k], b = tf.loop[(k + 1) % tf.loop.size()];
      if (a > b) std::swap(a, b);
      if (e.a != a || e.b != b) report("facet " + std::to_string(f) + " edge mismatch");
      if (std::find(e.facets.begin(), e.facets.end(), f) == e.facets.end()) {
        report("edge " + std::to_string(tf.edges[k]) + " misses facet " + std::to_string(f));
      }
    }
    if (tf.weight < 0.0) report("negative facet weight");
    if (tf.interior() != (tf.cell_b >= 0)) report("facet " + std::to_string(f) + " cell tags");
    if (!tf.interior()) {
      const int axis = tf.window_face / 2;
      const double plane = tf.window_face % 2 == 0 ? t.window.lo[axis] : t.window.hi[axis];
      for (std::size_t v : tf.loop) {
        if (std::abs(t.vertices[v].p[axis] - plane) > t.tolerance) {
          report("window facet " + std::to_string(f) + " leaves its face");
          break;
        }
      }
    }
  }
  // edges: every edge bounds at least two facets (closed cell surfaces)
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    const TessEdge& te = t.edges[e];
    if (te.facets.size() < 2) report("edge " + std::to_string(e) + " bounds < 2 facets");
    if (te.weight < 0.0) report("negative edge weight");
    for (std::size_t f : te.facets) {
      const auto& ed = t.facets[f].edges;
      if (std::find(ed.begin(), ed.end(), e) == ed.end()) {
        report("edge " + std::to_string(e) + " lists foreign facet");
      }
    }
  }
  // each cell surface is closed: every edge used an even number of times
  for (std::size_t c = 0; c < t.cell_facets.size(); ++c) {
    std::map<std::size_t, int> use;
    for (std::size_t f : t.cell_facets[c]) {
      for (std::size_t e : t.facets[f].edges) ++use[e];
    }
    for (const auto& [e, k] : use) {
      if (k != 2) {
        report("cell " + std::to_string(c) + " surface not closed at edge " + std::to_string(e));
        break;
      }
    }
  }
  const double vol = std::accumulate(t.cell_volumes.begin(), t.cell_volumes.end(), 0.0);
  if (std::abs(vol - t.window.volume()) > 1e-8 * t.window.volume()) {
    std::ostringstream os;
    os << "cell volumes sum to " << vol << ", window volume " << t.window.volume();
    report(os.str());
  }
  return problems;
}

}  // namespace crackforge::cracksim
