#include "crackforge/cracksim/surface.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <bit>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>

#include "crackforge/volcore/rng.hpp"

namespace crackforge::cracksim {

namespace {

constexpr std::array<std::uint8_t, 4> kVerticalMask{
    static_cast<std::uint8_t>((1u << x_lo) | (1u << y_lo)),
    static_cast<std::uint8_t>((1u << x_hi) | (1u << y_lo)),
    static_cast<std::uint8_t>((1u << x_hi) | (1u << y_hi)),
    static_cast<std::uint8_t>((1u << x_lo) | (1u << y_hi)),
};
constexpr std::uint8_t kZMask = (1u << z_lo) | (1u << z_hi);

bool on_box_edge(std::uint8_t mask) { return std::popcount(mask) >= 2; }

}  // namespace

int lateral_face(int k) {
  static constexpr std::array<int, 4> faces{y_lo, x_hi, y_hi, x_lo};
  return faces.at(static_cast<std::size_t>(k));
}

std::vector<std::size_t> face_shortest_path(const Tessellation& t, int face, std::size_t source,
                                            std::size_t target,
                                            const std::vector<std::uint8_t>& blocked,
                                            bool allow_box_edges) {
  const std::size_t nv = t.vertices.size();
  std::vector<std::vector<std::size_t>> adj(nv);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    const TessEdge& te = t.edges[e];
    if (!((te.window_mask >> face) & 1u)) continue;
    if (!blocked.empty() && blocked[e]) continue;
    if (!allow_box_edges && on_box_edge(te.window_mask)) continue;
    adj[te.a].push_back(e);
    adj[te.b].push_back(e);
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(nv, inf);
  std::vector<std::size_t> via(nv, t.edges.size());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    if (v == target) break;
    for (std::size_t e : adj[v]) {
      const TessEdge& te = t.edges[e];
      const std::size_t w = te.a == v ? te.b : te.a;
      const double nd = d + te.weight;
      if (nd < dist[w]) {
        dist[w] = nd;
        via[w] = e;
        pq.emplace(nd, w);
      }
    }
  }
  std::vector<std::size_t> path;
  if (dist[target] == inf) return path;
  for (std::size_t v = target; v != source;) {
    const TessEdge& te = t.edges[via[v]];
    path.push_back(via[v]);
    v = te.a == v ? te.b : te.a;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

BoundaryCycle boundary_cycle(const Tessellation& t, std::uint64_t seed) {
  Rng rng(seed);
  BoundaryCycle c;
  for (int k = 0; k < 4; ++k) {
    std::vector<std::size_t> inner, corner;
    for (std::size_t v = 0; v < t.vertices.size(); ++v) {
      const std::uint8_t m = t.vertices[v].window_mask;
      if ((m & kVerticalMask[k]) != kVerticalMask[k]) continue;
      (m & kZMask ? corner : inner).push_back(v);
    }
    const auto& pool = inner.empty() ? corner : inner;
    if (pool.empty()) throw Error("cycle anchor missing");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    c.anchors[static_cast<std::size_t>(k)] = pool[pick(rng)];
  }
  std::vector<std::uint8_t> used(t.edges.size(), 0);
  for (int k = 0; k < 4; ++k) {
    const std::size_t from = c.anchors[static_cast<std::size_t>(k)];
    const std::size_t to = c.anchors[static_cast<std::size_t>((k + 1) % 4)];
    auto path = face_shortest_path(t, lateral_face(k), from, to, used, false);
    if (path.empty()) path = face_shortest_path(t, lateral_face(k), from, to, used, true);
    if (path.empty()) throw Error("boundary cycle: anchors not connected on window face");
    for (std::size_t e : path) {
      used[e] = 1;
      c.edges.push_back(e);
      c.weight += t.edges[e].weight;
    }
  }
  return c;
}

std::vector<std::uint8_t> cycle_parity(const Tessellation& t, const BoundaryCycle& c) {
  std::vector<std::uint8_t> p(t.edges.size(), 0);
  for (std::size_t e : c.edges) p[e] ^= 1u;
  return p;
}

std::vector<std::uint8_t> chain_boundary(const Tessellation& t,
                                         std::span<const std::size_t> facets) {
  std::vector<std::uint8_t> p(t.edges.size(), 0);
  for (std::size_t f : facets) {
    for (std::size_t e : t.facets[f].edges) p[e] ^= 1u;
  }
  return p;
}

double chain_weight(const Tessellation& t, std::span<const std::size_t> facets) {
  std::vector<std::size_t> s(facets.begin(), facets.end());
  std::sort(s.begin(), s.end());
  double w = 0.0;
  for (std::size_t f : s) w += t.facets[f].weight;
  return w;
}

SurfaceSolver parse_surface_solver(const std::string& s) {
  if (s == "auto" || s == "automatic") return SurfaceSolver::automatic;
  if (s == "branch_and_bound" || s == "bnb") return SurfaceSolver::branch_and_bound;
  if (s == "min_cut" || s == "mincut") return SurfaceSolver::min_cut;
  throw ConfigError("unknown surface solver: " + s);
}

namespace {

std::vector<std::uint8_t> eligible_facets(const Tessellation& t, bool interior_only) {
  std::vector<std::uint8_t> ok(t.facets.size(), 1);
  if (interior_only) {
    for (std::size_t f = 0; f < t.facets.size(); ++f) ok[f] = t.facets[f].interior() ? 1 : 0;
  }
  return ok;
}

SurfaceChain finish(const Tessellation& t, std::vector<std::size_t> facets, SurfaceSolver by,
                    std::uint64_t nodes) {
  std::sort(facets.begin(), facets.end());
  SurfaceChain c;
  c.weight = chain_weight(t, facets);
  c.facets = std::move(facets);
  c.nodes = nodes;
  c.solved_by = by;
  return c;
}

// Exact 0/1 search over eligible facets with parity constraints per edge.
class BranchAndBound {
 public:
  BranchAndBound(const Tessellation& t, const std::vector<std::uint8_t>& parity,
                 const std::vector<std::uint8_t>& eligible, std::uint64_t node_limit)
      : t_(t), target_(parity), limit_(node_limit) {
    for (std::size_t f = 0; f < t.facets.size(); ++f) {
      if (eligible[f]) var_facet_.push_back(f);
    }
    const std::size_t ne = t.edges.size();
    inc_.assign(ne, {});
    var_edges_.assign(var_facet_.size(), {});
    for (std::size_t v = 0; v < var_facet_.size(); ++v) {
      for (std::size_t e : t.facets[var_facet_[v]].edges) {
        inc_[e].push_back(v);
        var_edges_[v].push_back(e);
      }
    }
    for (std::size_t e = 0; e < ne; ++e) {
      if (inc_[e].empty() && target_[e]) {
        throw Error("no spanning chain: a boundary edge has no eligible facet");
      }
    }
    weight_.resize(var_facet_.size());
    for (std::size_t v = 0; v < var_facet_.size(); ++v) weight_[v] = t.facets[var_facet_[v]].weight;
    build_order();
    val_.assign(var_facet_.size(), -1);
    par_.assign(ne, 0);
    open_.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) open_[e] = static_cast<std::int64_t>(inc_[e].size());
    used_.assign(var_facet_.size(), 0);
  }

  SurfaceChain solve() {
    search(0, 0.0);
    if (!have_best_) throw Error("no spanning chain for the boundary cycle");
    return incumbent();
  }

 private:
  SurfaceChain incumbent() const {
    std::vector<std::size_t> f;
    for (std::size_t v = 0; v < best_.size(); ++v) {
      if (best_[v]) f.push_back(var_facet_[v]);
    }
    return finish(t_, std::move(f), SurfaceSolver::branch_and_bound, nodes_);
  }

  // breadth-first from facets touching the boundary, so propagation bites early
  void build_order() {
    std::vector<std::uint8_t> seen(var_facet_.size(), 0);
    std::deque<std::size_t> q;
    for (std::size_t e = 0; e < inc_.size(); ++e) {
      if (!target_[e]) continue;
      for (std::size_t v : inc_[e]) {
        if (!seen[v]) {
          seen[v] = 1;
          q.push_back(v);
        }
      }
    }
    auto drain = [&] {
      while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        order_.push_back(v);
        for (std::size_t e : var_edges_[v]) {
          for (std::size_t w : inc_[e]) {
            if (!seen[w]) {
              seen[w] = 1;
              q.push_back(w);
            }
          }
        }
      }
    };
    drain();
    for (std::size_t v = 0; v < var_facet_.size(); ++v) {
      if (!seen[v]) {
        seen[v] = 1;
        q.push_back(v);
        drain();
      }
    }
  }

  // returns false on conflict; appends to trail
  bool assign(std::size_t v, int x, double& cost, std::vector<std::size_t>& trail) {
    std::vector<std::pair<std::size_t, int>> work{{v, x}};
    while (!work.empty()) {
      auto [u, y] = work.back();
      work.pop_back();
      if (val_[u] >= 0) {
        if (val_[u] != y) return false;
        continue;
      }
      val_[u] = static_cast<std::int8_t>(y);
      trail.push_back(u);
      if (y) cost += weight_[u];
      for (std::size_t e : var_edges_[u]) {
        --open_[e];
        par_[e] ^= static_cast<std::uint8_t>(y);
        if (open_[e] == 0) {
          if (par_[e] != target_[e]) return false;
        } else if (open_[e] == 1) {
          for (std::size_t w : inc_[e]) {
            if (val_[w] < 0) {
              work.emplace_back(w, par_[e] ^ target_[e]);
              break;
            }
          }
        }
      }
    }
    return true;
  }

  void undo(std::vector<std::size_t>& trail, std::size_t mark) {
    while (trail.size() > mark) {
      const std::size_t u = trail.back();
      trail.pop_back();
      for (std::size_t e : var_edges_[u]) {
        ++open_[e];
        par_[e] ^= static_cast<std::uint8_t>(val_[u]);
      }
      val_[u] = -1;
    }
  }

  // every still-odd edge needs one more facet; disjoint edges need distinct ones
  double lower_bound() {
    double lb = 0.0;
    std::vector<std::size_t> touched;
    for (std::size_t e = 0; e < inc_.size(); ++e) {
      if (open_[e] == 0 || par_[e] == target_[e]) continue;
      bool free = true;
      double wmin = std::numeric_limits<double>::infinity();
      for (std::size_t v : inc_[e]) {
        if (val_[v] >= 0) continue;
        if (used_[v]) {
          free = false;
          break;
        }
        wmin = std::min(wmin, weight_[v]);
      }
      if (!free) continue;
      for (std::size_t v : inc_[e]) {
        if (val_[v] < 0) {
          used_[v] = 1;
          touched.push_back(v);
        }
      }
      lb += wmin;
    }
    for (std::size_t v : touched) used_[v] = 0;
    return lb;
  }

  void search(std::size_t pos, double cost) {
    if (++nodes_ > limit_) {
      throw SolverTimeout("branch and bound node limit reached",
                          have_best_ ? incumbent() : SurfaceChain{}, have_best_);
    }
    while (pos < order_.size() && val_[order_[pos]] >= 0) ++pos;
    // weights sit on a dyadic grid (see build_voronoi), so costs are exact
    if (have_best_ && cost + lower_bound() >= best_cost_) return;
    if (pos == order_.size()) {
      best_cost_ = cost;
      best_.assign(val_.begin(), val_.end());
      have_best_ = true;
      return;
    }
    const std::size_t v = order_[pos];
    for (int x : {0, 1}) {
      std::vector<std::size_t> trail;
      double c = cost;
      if (assign(v, x, c, trail)) search(pos + 1, c);
      undo(trail, 0);
    }
  }

  const Tessellation& t_;
  const std::vector<std::uint8_t>& target_;
  std::uint64_t limit_;
  std::vector<std::size_t> var_facet_;
  std::vector<std::vector<std::size_t>> inc_;
  std::vector<std::vector<std::size_t>> var_edges_;
  std::vector<double> weight_;
  std::vector<std::size_t> order_;
  std::vector<std::int8_t> val_;
  std::vector<std::uint8_t> par_;
  std::vector<std::int64_t> open_;
  std::vector<std::uint8_t> used_;
  std::vector<std::int8_t> best_;
  double best_cost_ = 0.0;
  bool have_best_ = false;
  std::uint64_t nodes_ = 0;
};

// Two-colours the window facets so that colour changes exactly across odd
// boundary edges. Returns an empty vector when the target is not a cycle on the
// window surface.
std::vector<std::int8_t> window_colouring(const Tessellation& t,
                                          const std::vector<std::uint8_t>& parity) {
  std::vector<std::int8_t> colour(t.facets.size(), -1);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    if (!parity[e]) continue;
    std::size_t wf = 0;
    for (std::size_t f : t.edges[e].facets) wf += t.facets[f].interior() ? 0 : 1;
    if (wf != 2) return {};
  }
  for (std::size_t f0 = 0; f0 < t.facets.size(); ++f0) {
    if (t.facets[f0].interior() || colour[f0] >= 0) continue;
    colour[f0] = 1;
    std::deque<std::size_t> q{f0};
    while (!q.empty()) {
      const std::size_t f = q.front();
      q.pop_front();
      for (std::size_t e : t.facets[f].edges) {
        for (std::size_t g : t.edges[e].facets) {
          if (g == f || t.facets[g].interior()) continue;
          const auto want = static_cast<std::int8_t>(colour[f] ^ parity[e]);
          if (colour[g] < 0) {
            colour[g] = want;
            q.push_back(g);
          } else if (colour[g] != want) {
            return {};
          }
        }
      }
    }
  }
  return colour;
}

std::vector<std::size_t> min_cut_chain(const Tessellation& t,
                                       const std::vector<std::uint8_t>& eligible,
                                       const std::vector<std::int8_t>& colour) {
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Graph = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS,
      boost::property<boost::vertex_color_t, boost::default_color_type,
                      boost::property<boost::vertex_distance_t, long,
                                      boost::property<boost::vertex_predecessor_t,
                                                      Traits::edge_descriptor>>>,
      boost::property<boost::edge_capacity_t, double,
                      boost::property<boost::edge_residual_capacity_t, double,
                                      boost::property<boost::edge_reverse_t,
                                                      Traits::edge_descriptor>>>>;
  const std::size_t nc = t.cell_volumes.size();
  Graph g(nc + 2);
  const auto s = static_cast<Traits::vertex_descriptor>(nc);
  const auto sink = static_cast<Traits::vertex_descriptor>(nc + 1);
  auto cap = get(boost::edge_capacity, g);
  auto rev = get(boost::edge_reverse, g);
  auto link = [&](std::size_t u, std::size_t v, double c_uv, double c_vu) {
    auto e1 = boost::add_edge(u, v, g).first;
    auto e2 = boost::add_edge(v, u, g).first;
    cap[e1] = c_uv;
    cap[e2] = c_vu;
    rev[e1] = e2;
    rev[e2] = e1;
  };
  double total = 0.0;
  for (const TessFacet& f : t.facets) total += f.weight;
  const double inf = 2.0 * total + 1.0;
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    const TessFacet& tf = t.facets[f];
    const double w = eligible[f] ? tf.weight : inf;
    const auto a = static_cast<std::size_t>(tf.cell_a);
    if (tf.interior()) {
      link(a, static_cast<std::size_t>(tf.cell_b), w, w);
    } else if (colour[f] == 1) {
      link(s, a, w, 0.0);
    } else {
      link(a, sink, w, 0.0);
    }
  }
  const double flow = boost::boykov_kolmogorov_max_flow(g, s, sink);
  if (flow >= inf) throw Error("no spanning chain for the boundary cycle");
  // source side = vertices reachable from s through unsaturated arcs
  auto res = get(boost::edge_residual_capacity, g);
  const double slack = 1e-12 * (1.0 + total);
  std::vector<std::uint8_t> in_s(nc + 2, 0);
  std::deque<std::size_t> q{static_cast<std::size_t>(s)};
  in_s[s] = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop_front();
    for (auto [it, end] = boost::out_edges(u, g); it != end; ++it) {
      const std::size_t v = boost::target(*it, g);
      if (!in_s[v] && res[*it] > slack) {
        in_s[v] = 1;
        q.push_back(v);
      }
    }
  }
  std::vector<std::size_t> chain;
  for (std::size_t f = 0; f < t.facets.size(); ++f) {
    const TessFacet& tf = t.facets[f];
    const std::uint8_t sa = in_s[static_cast<std::size_t>(tf.cell_a)];
    const bool x = tf.interior() ? sa != in_s[static_cast<std::size_t>(tf.cell_b)]
                                 : ((colour[f] == 1) != (sa == 1));
    if (x) chain.push_back(f);
  }
  return chain;
}

}  // namespace

SurfaceChain min_weight_surface(const Tessellation& t, const std::vector<std::uint8_t>& parity,
                                const SurfaceOptions& opts) {
  if (parity.size() != t.edges.size()) throw Error("parity vector does not match edges");
  const auto eligible = eligible_facets(t, opts.interior_only);
  if (opts.solver != SurfaceSolver::branch_and_bound) {
    const auto colour = window_colouring(t, parity);
    if (!colour.empty()) {
      auto chain = min_cut_chain(t, eligible, colour);
      if (chain_boundary(t, chain) == parity) {
        bool ok = true;
        for (std::size_t f : chain) ok = ok && eligible[f];
        if (ok) return finish(t, std::move(chain), SurfaceSolver::min_cut, 0);
      }
    }
    if (opts.solver == SurfaceSolver::min_cut) {
      throw Error("min-cut solver needs a boundary cycle on the window surface");
    }
  }
  BranchAndBound bb(t, parity, eligible, opts.node_limit);
  return bb.solve();
}

std::vector<std::size_t> interior_members(const Tessellation& t,
                                          std::span<const std::size_t> facets) {
  std::vector<std::size_t> out;
  for (std::size_t f : facets) {
    if (t.facets[f].interior()) out.push_back(f);
  }
  return out;
}

BinaryMask rasterize_surface(const Tessellation& t, std::span<const std::size_t> facets,
                             const Dims& dims) {
  if (!dims.valid()) throw Error("rasterize_surface: invalid dims");
  BinaryMask out(dims, 0);
  const Vec3 lo = t.window.lo, ext = t.window.extent();
  const std::array<std::int64_t, 3> n{dims.nx, dims.ny, dims.nz};
  auto to_voxel = [&](const Vec3& p) {
    Vec3 u;
    for (int a = 0; a < 3; ++a) {
      u[a] = (p[a] - lo[a]) / ext[a] * static_cast<double>(n[static_cast<std::size_t>(a)]) - 0.5;
    }
    return u;
  };
  std::vector<int> edge_use(t.edges.size(), 0);
  for (std::size_t f : facets) {
    for (std::size_t e : t.facets[f].edges) ++edge_use[e];
  }
  const double fold_margin = 0.5 * std::sqrt(3.0);
  for (std::size_t f : facets) {
    const TessFacet& tf = t.facets[f];
    const std::size_t m = tf.loop.size();
    std::vector<Vec3> v(m);
    for (std::size_t k = 0; k < m; ++k) v[k] = to_voxel(t.vertices[tf.loop[k]].p);
    Vec3 nn{};
    Vec3 centre{};
    for (std::size_t k = 0; k < m; ++k) {
      const Vec3& a = v[k];
      const Vec3& b = v[(k + 1) % m];
      nn = nn + cross(a, b);
      centre = centre + a;
    }
    if (norm(nn) == 0.0) continue;
    const Vec3 nu = (1.0 / norm(nn)) * nn;
    centre = (1.0 / static_cast<double>(m)) * centre;
    const double half = 0.5 * norm_inf(nu);
    std::vector<Vec3> side(m);
    std::vector<double> margin(m);
    double maxm = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      Vec3 e = cross(v[(k + 1) % m] - v[k], nu);
      side[k] = (1.0 / norm(e)) * e;
      margin[k] = (edge_use[tf.edges[k]] >= 2 ? fold_margin : 0.0) + 1e-9;
      maxm = std::max(maxm, margin[k]);
    }
    std::array<std::int64_t, 3> b0{}, b1{};
    for (int a = 0; a < 3; ++a) {
      double mn = v[0][a], mx = v[0][a];
      for (const Vec3& p : v) {
        mn = std::min(mn, p[a]);
        mx = std::max(mx, p[a]);
      }
      const auto ua = static_cast<std::size_t>(a);
      b0[ua] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(mn - maxm - 1.0)));
      b1[ua] = std::min<std::int64_t>(n[ua] - 1, static_cast<std::int64_t>(std::ceil(mx + maxm + 1.0)));
    }
    for (std::int64_t z = b0[2]; z <= b1[2]; ++z) {
      for (std::int64_t y = b0[1]; y <= b1[1]; ++y) {
        for (std::int64_t x = b0[0]; x <= b1[0]; ++x) {
          const Vec3 c{static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
          const double d = dot(nu, c - centre);
          if (d < -half || d >= half) continue;
          const Vec3 q = c - d * nu;
          bool inside = true;
          for (std::size_t k = 0; k < m && inside; ++k) {
            inside = dot(side[k], q - v[k]) <= margin[k];
          }
          if (inside) out(x, y, z) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace crackforge::cracksim
