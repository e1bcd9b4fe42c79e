#include "hcube/dfs_merge.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "hcube/errors.hpp"

namespace hcube {

std::span<const Vertex> AuxGraph::segment(int a) const {
  const auto& p = paths[static_cast<std::size_t>(a / 2)];
  const auto len = static_cast<std::size_t>(segment_len);
  if (is_head(a)) return {p.data(), len};
  return {p.data() + (p.size() - len), len};
}

namespace {

void finish_adjacency(AuxGraph& g) {
  g.adj.assign(static_cast<std::size_t>(g.a_count()) + g.targets.size(), {});
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const AuxEdge& x = g.edges[e];
    g.adj[static_cast<std::size_t>(x.a)].emplace_back(x.b, static_cast<int>(e));
    g.adj[static_cast<std::size_t>(x.b)].emplace_back(x.a, static_cast<int>(e));
  }
  for (auto& list : g.adj) std::sort(list.begin(), list.end());
}

}  // namespace

AuxGraph build_aux(const CoverFamily& p1, int i, int segment_len, std::span<const Vertex> targets) {
  require(segment_len >= 1, "segment length must be positive");
  AuxGraph g;
  g.layer = i;
  g.segment_len = segment_len;
  g.paths = p1.paths;
  g.targets.assign(targets.begin(), targets.end());
  std::sort(g.targets.begin(), g.targets.end());
  for (Vertex t : g.targets) require(layer_of(t) == i, "aux target outside layer i");
  for (const auto& p : g.paths) {
    if (p.size() < 2 * static_cast<std::size_t>(segment_len)) throw PreconditionError("segments would overlap");
  }
  const int base = g.a_count();
  for (int a = 0; a < base; ++a) {
    std::map<int, Vertex> best;  // target index -> smallest witness on the segment
    for (Vertex s : g.segment(a)) {
      if (layer_of(s) != i + 1) continue;
      std::uint64_t m = s.bits;
      while (m != 0) {
        const std::uint64_t low = m & (~m + 1);
        m ^= low;
        const Vertex t{s.bits ^ low};
        const auto it = std::lower_bound(g.targets.begin(), g.targets.end(), t);
        if (it == g.targets.end() || *it != t) continue;
        const int idx = static_cast<int>(it - g.targets.begin());
        auto [pos, inserted] = best.try_emplace(idx, s);
        if (!inserted && s < pos->second) pos->second = s;
      }
    }
    for (const auto& [idx, s] : best) {
      g.edges.push_back(AuxEdge{a, base + idx, s, g.targets[static_cast<std::size_t>(idx)]});
    }
  }
  finish_adjacency(g);
  return g;
}

AuxGraph make_aux(int path_count, int target_count, std::span<const std::pair<int, int>> edges) {
  AuxGraph g;
  g.paths.assign(static_cast<std::size_t>(path_count), {});
  g.targets.assign(static_cast<std::size_t>(target_count), Vertex{});
  const int base = g.a_count();
  for (auto [a, b] : edges) {
    require(a >= 0 && a < base && b >= 0 && b < target_count, "aux edge out of range");
    g.edges.push_back(AuxEdge{a, base + b, {}, {}});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const AuxEdge& x, const AuxEdge& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
  finish_adjacency(g);
  return g;
}

DfsLimits DfsLimits::from(const ParameterSet& ps) {
  return DfsLimits{ps.phase_vertex_cap, ps.phase_query_cap, ps.deg_floor, ps.strict_queries, ps.long_path_floor};
}

DfsState::DfsState(const AuxGraph& graph)
    : g(&graph),
      place(static_cast<std::size_t>(graph.size()), Place::z),
      marks(graph.edges.size(), Mark::unqueried),
      cursor(static_cast<std::size_t>(graph.size()), 0) {}

std::size_t DfsState::count(Place p) const {
  return static_cast<std::size_t>(std::count(place.begin(), place.end(), p));
}

int DfsState::next_seed() {
  const auto a = static_cast<std::size_t>(g->a_count());
  while (seed_cursor < a && place[seed_cursor] != Place::z) ++seed_cursor;
  return seed_cursor < a ? static_cast<int>(seed_cursor) : -1;
}

void DfsState::check_invariants() const {
  const std::size_t n = place.size();
  ensure(n == static_cast<std::size_t>(g->size()), "state size mismatch");
  std::vector<char> on_stack(n, 0);
  for (int x : stack) {
    ensure(place[static_cast<std::size_t>(x)] == Place::u2, "stack vertex not marked U2");
    ensure(!on_stack[static_cast<std::size_t>(x)], "vertex twice on the stack");
    on_stack[static_cast<std::size_t>(x)] = 1;
  }
  ensure(count(Place::u2) == stack.size(), "U2 marks disagree with the stack");
  ensure(count(Place::u1) == in_u1, "U1 counter drifted");

  auto open_between = [&](int x, int y) {
    for (auto [nb, e] : g->adj[static_cast<std::size_t>(x)]) {
      if (nb == y) return marks[static_cast<std::size_t>(e)] == Mark::open;
    }
    return false;
  };
  for (std::size_t k = 1; k < stack.size(); ++k) {
    const int x = stack[k - 1];
    const int y = stack[k];
    const bool matched = g->is_a(x) && g->is_a(y) && AuxGraph::partner(x) == y;
    ensure(matched || open_between(x, y), "stack does not span a path");
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (place[x] != Place::u1) continue;
    for (auto [nb, e] : g->adj[x]) {
      if (place[static_cast<std::size_t>(nb)] != Place::z) continue;
      ensure(marks[static_cast<std::size_t>(e)] == Mark::closed, "U1 vertex has an unrefuted edge into Z");
    }
  }
}

void cleanup(DfsState& st, int floor) {
  const AuxGraph& g = *st.g;
  const std::size_t n = static_cast<std::size_t>(g.size());
  auto live = [&](std::size_t x) { return st.place[x] != Place::u && st.place[x] != Place::w; };
  std::vector<int> deg(n, 0);
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (std::size_t x = 0; x < n; ++x) {
    if (!live(x)) continue;
    for (auto [nb, e] : g.adj[x]) deg[x] += live(static_cast<std::size_t>(nb)) ? 1 : 0;
    if (deg[x] <= floor) ready.push(static_cast<int>(x));
  }
  while (!ready.empty()) {
    const auto x = static_cast<std::size_t>(ready.top());
    ready.pop();
    if (!live(x)) continue;
    ensure(st.place[x] == Place::z, "cleanup ran inside a phase");
    st.place[x] = Place::w;
    for (auto [nb, e] : g.adj[x]) {
      const auto y = static_cast<std::size_t>(nb);
      if (!live(y)) continue;
      if (--deg[y] == floor) ready.push(nb);
    }
  }
}

PhaseRecord run_phase(DfsState& st, const DfsLimits& lim, const AuxEdgeSource& source,
                      const DfsObserver& observer) {
  const AuxGraph& g = *st.g;
  ensure(st.stack.empty() && st.in_u1 == 0, "phase started with a dirty stack");
  st.phase++;
  st.phase_queries = 0;
  PhaseRecord rec;
  auto notify = [&](Action a) {
    if (observer) observer(st, a);
  };
  auto push = [&](int x) {
    st.place[static_cast<std::size_t>(x)] = Place::u2;
    st.stack.push_back(x);
  };

  while (true) {
    const int seed = st.next_seed();
    if (seed < 0) {
      rec.end = PhaseEnd::exhausted;
      break;
    }
    if (st.stack.empty()) {
      push(seed);  // (c)
      notify(Action::seed);
      continue;
    }
    const int v = st.stack.back();
    const auto vi = static_cast<std::size_t>(v);
    if (g.is_a(v) && st.place[static_cast<std::size_t>(AuxGraph::partner(v))] == Place::z) {
      push(AuxGraph::partner(v));  // (a)
      notify(Action::follow);
      continue;
    }
    const auto& nbrs = g.adj[vi];
    auto& cur = st.cursor[vi];
    while (cur < nbrs.size() && st.marks[static_cast<std::size_t>(nbrs[cur].second)] != Mark::unqueried) ++cur;
    if (cur == nbrs.size()) {
      st.stack.pop_back();  // (b)
      st.place[vi] = Place::u1;
      st.in_u1++;
      notify(Action::retire);
      continue;
    }
    // (d) is next: the caps gate it.
    if (static_cast<double>(st.in_u1 + st.stack.size()) >= lim.vertex_cap) {
      rec.end = PhaseEnd::vertex_cap;
      break;
    }
    if (st.phase_queries >= lim.query_cap) {
      rec.end = PhaseEnd::query_cap;
      break;
    }
    const auto [u, e] = nbrs[cur];
    auto& mark = st.marks[static_cast<std::size_t>(e)];
    if (st.place[static_cast<std::size_t>(u)] != Place::z) {
      mark = Mark::skipped;
      if (lim.strict) {
        st.phase_queries += 1;
        st.total_queries += 1;
      }
      notify(Action::skip);
      continue;
    }
    const bool open = source(g.edges[static_cast<std::size_t>(e)]);
    mark = open ? Mark::open : Mark::closed;
    st.phase_queries += 1;
    st.total_queries += 1;
    if (open) push(u);
    notify(Action::query);
  }

  rec.path = st.stack;
  rec.queries = st.phase_queries;
  for (auto& p : st.place) {
    if (p == Place::u1 || p == Place::u2) {
      p = Place::u;
      rec.retired++;
    }
  }
  st.stack.clear();
  st.in_u1 = 0;
  return rec;
}

DfsResult dfs_aux(const AuxGraph& g, const DfsLimits& lim, const AuxEdgeSource& source,
                  const DfsObserver& observer) {
  DfsState st(g);
  DfsResult out;
  auto settled = [&] {
    return std::all_of(st.place.begin(), st.place.end(),
                       [](Place p) { return p == Place::u || p == Place::w; });
  };
  while (!settled()) {
    cleanup(st, lim.deg_floor);
    if (settled()) break;
    PhaseRecord rec = run_phase(st, lim, source, observer);
    ensure(rec.retired > 0 || settled(), "phase made no progress");
    if (rec.retired == 0) break;
    rec.long_path = static_cast<double>(rec.path.size()) >= lim.long_path_floor;
    out.retired += rec.retired;
    out.phases.push_back(std::move(rec));
  }
  out.final_u = st.count(Place::u);
  for (int a = 0; a < g.a_count(); ++a) out.w_in_a += st.place[static_cast<std::size_t>(a)] == Place::w ? 1 : 0;
  ensure(out.retired == out.final_u, "retired vertices do not add up to U");
  return out;
}

namespace {

struct Unit {
  int first = -1;
  int second = -1;  // partner segment for a matched pair
};

std::size_t position(const std::vector<Vertex>& seq, Vertex v) {
  const auto it = std::find(seq.begin(), seq.end(), v);
  ensure(it != seq.end(), "witness vertex missing from its path");
  return static_cast<std::size_t>(it - seq.begin());
}

const AuxEdge& edge_between(const AuxGraph& g, int x, int y) {
  for (auto [nb, e] : g.adj[static_cast<std::size_t>(x)]) {
    if (nb == y) return g.edges[static_cast<std::size_t>(e)];
  }
  throw InvariantError("aux path uses a non-edge");
}

}  // namespace

RealizeResult realize_paths(const AuxGraph& g, const DfsResult& fam, const ParameterSet& ps,
                            const EdgeOracle& eo, std::size_t denominator) {
  RealizeResult out;
  out.family.denominator = denominator;
  for (const PhaseRecord& rec : fam.phases) {
    const auto& r = rec.path;
    if (r.empty() || !rec.long_path) continue;
    out.flagged++;
    std::size_t lonely = 0;
    for (int x : r) {
      if (g.is_a(x) && std::find(r.begin(), r.end(), AuxGraph::partner(x)) == r.end()) ++lonely;
    }
    if (lonely > 0 && static_cast<double>(lonely) >= ps.bad_path_fraction * static_cast<double>(r.size())) {
      out.bad++;
      continue;
    }

    std::vector<Unit> units;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (g.is_a(r[k]) && k + 1 < r.size() && r[k + 1] == AuxGraph::partner(r[k])) {
        units.push_back(Unit{r[k], r[k + 1]});
        ++k;
      } else {
        units.push_back(Unit{r[k], -1});
      }
    }
    auto witness = [&](int seg, int target) {
      const AuxEdge& e = edge_between(g, seg, target);
      ensure(eo.exposure(e.on_segment, e.target) == Exposure::open, "witness inconsistency: aux edge open, cube edge not");
      return e.on_segment;
    };

    std::vector<Vertex> path;
    for (std::size_t k = 0; k < units.size(); ++k) {
      const Unit& un = units[k];
      if (!g.is_a(un.first)) {
        path.push_back(g.targets[static_cast<std::size_t>(un.first - g.a_count())]);
        continue;
      }
      const int prev = k > 0 ? units[k - 1].first : -1;
      const int next = k + 1 < units.size() ? units[k + 1].first : -1;
      const int exit_seg = un.second >= 0 ? un.second : un.first;
      const auto& seq = g.paths[static_cast<std::size_t>(un.first / 2)];
      const bool forward = g.is_head(un.first);
      std::size_t from = 0;
      std::size_t to = 0;
      if (un.second >= 0) {
        from = prev >= 0 ? position(seq, witness(un.first, prev)) : (forward ? 0 : seq.size() - 1);
        to = next >= 0 ? position(seq, witness(exit_seg, next)) : (forward ? seq.size() - 1 : 0);
      } else {
        // A segment without its partner: only the stretch between its two attachments.
        const auto seg = g.segment(un.first);
        const std::size_t lo = position(seq, seg.front());
        const std::size_t hi = lo + seg.size() - 1;
        from = prev >= 0 ? position(seq, witness(un.first, prev)) : (forward ? lo : hi);
        to = next >= 0 ? position(seq, witness(un.first, next)) : (prev >= 0 ? from : (forward ? hi : lo));
      }
      if (from <= to) {
        for (std::size_t t = from; t <= to; ++t) path.push_back(seq[t]);
      } else {
        for (std::size_t t = from + 1; t-- > to;) path.push_back(seq[t]);
      }
    }
    for (std::size_t k = 1; k < path.size(); ++k) {
      ensure(adjacent(path[k - 1], path[k]) && eo.exposure(path[k - 1], path[k]) == Exposure::open,
             "realized path uses an unexposed or closed edge");
    }
    out.family.covered += path.size();
    out.family.paths.push_back(std::move(path));
  }
  return out;
}

MergeOutcome merge_layer(const CoverFamily& p1, int i, const ParameterSet& ps, EdgeOracle& eo,
                         const PartitionOracle& po, const DfsObserver& observer) {
  std::vector<Vertex> targets;
  for (Vertex v : layer_vertices(ps.d, i)) {
    if (po.class_of(v) == VClass::v2) targets.push_back(v);
  }
  MergeOutcome out;
  out.aux = build_aux(p1, i, ps.aux_segment_len, targets);
  auto source = [&eo](const AuxEdge& e) { return eo.query(e.on_segment, e.target, Stage::aux); };
  out.dfs = dfs_aux(out.aux, DfsLimits::from(ps), source, observer);
  const std::size_t band = binomial(ps.d, i) + binomial(ps.d, i + 1);
  out.realized = realize_paths(out.aux, out.dfs, ps, eo, band);
  return out;
}

}  // namespace hcube
