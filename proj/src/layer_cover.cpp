#include "hcube/layer_cover.hpp"

#include <algorithm>
#include <array>

#include "hcube/errors.hpp"

namespace hcube {

int LayerGraph::index_of(Vertex v) const {
  const auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
  if (it == vertices.end() || *it != v) return -1;
  return static_cast<int>(it - vertices.begin());
}

std::size_t LayerGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adj) n += a.size();
  return n / 2;
}

namespace {

template <typename Open>
LayerGraph build(int i, std::vector<Vertex> vertices, Open&& open) {
  LayerGraph h;
  h.layer = i;
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  for (Vertex v : vertices) require(layer_of(v) == i || layer_of(v) == i + 1, "vertex outside the layer pair");
  h.vertices = std::move(vertices);
  h.adj.assign(h.vertices.size(), {});
  for (std::size_t a = 0; a < h.vertices.size(); ++a) {
    const Vertex v = h.vertices[a];
    if (layer_of(v) != i) continue;
    std::uint64_t free = ~v.bits;
    for (int c = 1; c <= kMaxDim; ++c) {
      if (!(free & coord_bit(c))) continue;
      const Vertex w{v.bits | coord_bit(c)};
      if (w.bits > h.vertices.back().bits) break;
      const int b = h.index_of(w);
      if (b < 0 || !open(v, w)) continue;
      h.adj[a].push_back(b);
      h.adj[static_cast<std::size_t>(b)].push_back(static_cast<int>(a));
    }
  }
  for (auto& a : h.adj) std::sort(a.begin(), a.end());
  return h;
}

}  // namespace

LayerGraph build_layer_graph(int i, std::vector<Vertex> vertices, EdgeOracle& eo, Stage stage) {
  return build(i, std::move(vertices), [&](Vertex u, Vertex v) { return eo.query(u, v, stage); });
}

LayerGraph build_layer_graph(int i, std::vector<Vertex> vertices, const EdgePredicate& open) {
  return build(i, std::move(vertices), open);
}

Matchings two_matchings(const LayerGraph& h, double cap) {
  const std::size_t n = h.vertices.size();
  Matchings m;
  std::vector<char> active(n, 1);
  for (std::size_t v = 0; v < n; ++v) {
    if (static_cast<double>(h.adj[v].size()) > cap) {
      active[v] = 0;
      m.removed++;
    }
  }
  int delta = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!active[v]) continue;
    int deg = 0;
    for (int w : h.adj[v]) deg += active[static_cast<std::size_t>(w)];
    delta = std::max(delta, deg);
  }
  m.colors = delta;
  if (delta == 0) return m;

  // at[v * delta + c] = neighbour joined to v by colour c, or -1.
  std::vector<int> at(n * static_cast<std::size_t>(delta), -1);
  auto slot = [&](int v, int c) -> int& {
    return at[static_cast<std::size_t>(v) * static_cast<std::size_t>(delta) + static_cast<std::size_t>(c)];
  };
  auto free_colour = [&](int v) {
    for (int c = 0; c < delta; ++c) {
      if (slot(v, c) < 0) return c;
    }
    throw InvariantError("no free colour at a vertex of degree <= delta");
  };

  std::vector<std::pair<int, int>> path;
  for (std::size_t uu = 0; uu < n; ++uu) {
    const int u = static_cast<int>(uu);
    if (!active[uu] || layer_of(h.vertices[uu]) != h.layer) continue;
    for (int w : h.adj[uu]) {
      if (!active[static_cast<std::size_t>(w)]) continue;
      const int a = free_colour(u);
      const int b = free_colour(w);
      int c = a;
      if (slot(w, a) >= 0) {
        if (slot(u, b) < 0) {
          c = b;
        } else {
          // Swap a and b along the alternating path leaving w; bipartiteness keeps u off it.
          path.clear();
          int cur = w;
          int col = a;
          while (slot(cur, col) >= 0) {
            const int next = slot(cur, col);
            path.emplace_back(cur, next);
            cur = next;
            col = col == a ? b : a;
          }
          col = a;
          for (auto [x, y] : path) {
            slot(x, col) = -1;
            slot(y, col) = -1;
            col = col == a ? b : a;
          }
          col = b;
          for (auto [x, y] : path) {
            slot(x, col) = y;
            slot(y, col) = x;
            col = col == a ? b : a;
          }
          ensure(slot(w, a) < 0 && slot(u, a) < 0, "alternating path swap failed");
        }
      }
      slot(u, c) = w;
      slot(w, c) = u;
    }
  }

  std::vector<std::vector<std::pair<int, int>>> classes(static_cast<std::size_t>(delta));
  for (std::size_t uu = 0; uu < n; ++uu) {
    if (layer_of(h.vertices[uu]) != h.layer) continue;
    for (int c = 0; c < delta; ++c) {
      const int w = slot(static_cast<int>(uu), c);
      if (w >= 0) classes[static_cast<std::size_t>(c)].emplace_back(static_cast<int>(uu), w);
    }
  }
  std::vector<int> order(static_cast<std::size_t>(delta));
  for (int c = 0; c < delta; ++c) order[static_cast<std::size_t>(c)] = c;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return classes[static_cast<std::size_t>(x)].size() > classes[static_cast<std::size_t>(y)].size();
  });
  m.first = std::move(classes[static_cast<std::size_t>(order[0])]);
  if (delta > 1) m.second = std::move(classes[static_cast<std::size_t>(order[1])]);
  std::sort(m.first.begin(), m.first.end());
  std::sort(m.second.begin(), m.second.end());
  return m;
}

std::vector<Component> decompose(const LayerGraph& h, const Matchings& m) {
  const std::size_t n = h.vertices.size();
  std::vector<std::array<int, 2>> nb(n, {-1, -1});
  auto add = [&](int a, int b) {
    auto& s = nb[static_cast<std::size_t>(a)];
    ensure(s[1] < 0, "matching union has degree above two");
    (s[0] < 0 ? s[0] : s[1]) = b;
  };
  for (const auto* list : {&m.first, &m.second}) {
    for (auto [a, b] : *list) {
      add(a, b);
      add(b, a);
    }
  }
  auto degree = [&](std::size_t v) { return (nb[v][0] >= 0) + (nb[v][1] >= 0); };
  std::vector<char> seen(n, 0);
  std::vector<Component> out;
  auto walk = [&](int start, int first) {
    Component c;
    int prev = -1;
    int cur = start;
    int next = first;
    while (true) {
      seen[static_cast<std::size_t>(cur)] = 1;
      c.seq.push_back(cur);
      if (next < 0 || next == start) {
        c.cycle = next == start;
        break;
      }
      prev = cur;
      cur = next;
      const auto& s = nb[static_cast<std::size_t>(cur)];
      next = s[0] == prev ? s[1] : s[0];
    }
    out.push_back(std::move(c));
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (!seen[v] && degree(v) == 1) walk(static_cast<int>(v), nb[v][0]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!seen[v] && degree(v) == 2) walk(static_cast<int>(v), std::min(nb[v][0], nb[v][1]));
  }
  return out;
}

std::vector<std::vector<Vertex>> cut_sequence(std::span<const Vertex> seq, int lo) {
  require(lo >= 1, "cut length must be positive");
  std::vector<std::vector<Vertex>> out;
  const std::size_t block = static_cast<std::size_t>(lo) + 1;
  const std::size_t blocks = seq.size() / block;
  for (std::size_t k = 0; k < blocks; ++k) {
    const std::size_t begin = k * block;
    const std::size_t end = k + 1 == blocks ? seq.size() : begin + block;
    out.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(begin), seq.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

CoverResult cover_layer_graph(const LayerGraph& h, double cap, int lo, std::size_t denominator) {
  CoverResult r;
  r.matchings = two_matchings(h, cap);
  r.family.denominator = denominator;
  for (const Component& c : decompose(h, r.matchings)) {
    std::vector<Vertex> seq;
    seq.reserve(c.seq.size());
    for (int v : c.seq) seq.push_back(h.vertices[static_cast<std::size_t>(v)]);
    if (c.cycle) r.cycles.push_back(seq);
    auto pieces = cut_sequence(seq, lo);
    if (pieces.empty()) r.dropped++;
    for (auto& piece : pieces) {
      r.family.covered += piece.size();
      r.family.paths.push_back(std::move(piece));
    }
  }
  return r;
}

LayerCover short_path_cover(int i, const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po) {
  LayerCover lc;
  lc.spread = well_spread_report(po, i, ps);
  std::vector<Vertex> keep;
  std::size_t v1_total = 0;
  for (int layer : {i, i + 1}) {
    for (Vertex v : layer_vertices(ps.d, layer)) {
      if (po.class_of(v) != VClass::v1) continue;
      ++v1_total;
      if (!lc.spread.is_bad(v)) keep.push_back(v);
    }
  }
  lc.graph = build_layer_graph(i, std::move(keep), eo, Stage::cover);
  // Expected V1 degree across the pair, before percolation.
  const double delta = ps.q1 * std::max(ps.d - i, i + 1);
  const double cap = (1.0 + ps.high_deg_delta) * delta * ps.p;
  lc.cover = cover_layer_graph(lc.graph, cap, ps.cover_len_lo, v1_total);
  return lc;
}

std::uint64_t short_cycle_census(int i, int maxlen, int d, const EdgePredicate& open) {
  require(maxlen % 2 == 0, "cycle length bound must be even");
  check_dim(d);
  require(i >= 0 && i + 1 <= d, "layer pair outside the cube");
  auto verts = layer_vertices(d, i);
  const auto upper = layer_vertices(d, i + 1);
  verts.insert(verts.end(), upper.begin(), upper.end());
  std::sort(verts.begin(), verts.end());

  std::uint64_t closed_walks = 0;
  std::vector<Vertex> path;
  auto in_band = [&](Vertex w) { return layer_of(w) == i || layer_of(w) == i + 1; };
  auto on_path = [&](Vertex w) { return std::find(path.begin(), path.end(), w) != path.end(); };
  // Cycles are rooted at their smallest vertex and counted once per direction.
  auto dfs = [&](auto&& self, Vertex s, Vertex v) -> void {
    for (int c = 1; c <= d; ++c) {
      const Vertex w = flip(v, c);
      if (!in_band(w)) continue;
      if (w == s) {
        if (path.size() >= 3 && open(v, w)) ++closed_walks;
        continue;
      }
      if (w < s || static_cast<int>(path.size()) >= maxlen || on_path(w) || !open(v, w)) continue;
      path.push_back(w);
      self(self, s, w);
      path.pop_back();
    }
  };
  for (Vertex s : verts) {
    path.assign(1, s);
    dfs(dfs, s, s);
  }
  return closed_walks / 2;
}

std::uint64_t short_cycle_census(int i, int maxlen, const EdgeOracle& eo) {
  return short_cycle_census(i, maxlen, eo.dim(), eo.predicate());
}

}  // namespace hcube
