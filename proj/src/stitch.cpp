#include "hcube/stitch.hpp"

#include <algorithm>
#include <deque>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "hcube/errors.hpp"

namespace hcube {

Connector make_connector(int k, Vertex u) {
  require(k >= 2 && k <= kMaxDim, "connector coordinate out of range");
  require(in_q0(u) && !has_coord(u, k), "connector start must lie in Q_0 and miss k");
  const Vertex mid = flip(u, 1);
  return Connector{k, u, mid, flip(mid, k)};
}

SubcubeSpec ConnectorPlan::cube_for(int k) const {
  require(kset.contains(k), "coordinate outside K");
  const std::uint64_t others = kset.mask() & ~coord_bit(k);
  return SubcubeSpec{Vertex{coord_bit(1) | coord_bit(k)}, Vertex{full_mask(d) & ~others}, d};
}

ConnectorPlan plan_connectors(std::span<const StitchPath> parts, const CoordSet& jset, int d, int k_size) {
  check_dim(d);
  require(!parts.empty(), "nothing to stitch");
  require(!jset.contains(1), "J must not contain coordinate 1");
  ConnectorPlan plan;
  plan.d = d;
  plan.jset = jset;
  plan.parts.assign(parts.begin(), parts.end());
  for (int c = 2; c <= d; ++c) {
    if (jset.contains(c)) continue;
    if (k_size > 0 && plan.kset.size() == k_size) break;
    plan.kset.insert(c);
  }
  const auto s = parts.size();
  if ((k_size > 0 && plan.kset.size() < k_size) || static_cast<std::size_t>(plan.kset.size()) < s) {
    throw PreconditionError("not enough eligible coordinates for K");
  }
  const auto ks = plan.kset.to_vector();
  for (std::size_t r = 0; r < s; ++r) {
    CoordSet cls;
    for (std::size_t x = r * ks.size() / s; x < (r + 1) * ks.size() / s; ++x) cls.insert(ks[x]);
    plan.classes.push_back(cls);
  }

  // Connectors from distinct witnesses are vertex-disjoint; those sharing u share only u and u + {1}.
  std::unordered_map<std::uint64_t, std::uint64_t> owner;  // vertex -> starting witness
  auto claim = [&](Vertex x, Vertex u) {
    const auto [it, fresh] = owner.try_emplace(x.bits, u.bits);
    ensure(fresh || it->second == u.bits, "connectors from distinct witnesses collide");
  };
  for (std::size_t r = 0; r < s; ++r) {
    const StitchPath& here = plan.parts[r];
    const StitchPath& next = plan.parts[(r + 1) % s];
    for (int k : plan.classes[r].to_vector()) {
      for (const auto* side : {&here.w_minus, &next.w_plus}) {
        for (Vertex u : *side) {
          require((support(u) & plan.kset).empty(), "witness support meets K");
          const Connector c = make_connector(k, u);
          claim(c.u, u);
          claim(c.mid, u);
          const auto [it, fresh] = owner.try_emplace(c.end.bits, u.bits);
          ensure(fresh, "connector endpoints collide");
          plan.connectors.push_back(c);
        }
      }
    }
  }
  return plan;
}

namespace {

// BFS tree over open subcube edges from a; stops early once stop is reached.
std::unordered_map<std::uint64_t, std::uint64_t> explore(const SubcubeSpec& spec, Vertex a, EdgeOracle& eo,
                                                         const std::unordered_set<std::uint64_t>& stop,
                                                         const VertexFilter& blocked) {
  const std::uint64_t free = spec.top.bits & ~spec.bottom.bits;
  std::unordered_map<std::uint64_t, std::uint64_t> parent{{a.bits, a.bits}};
  std::deque<Vertex> queue{a};
  while (!queue.empty()) {
    const Vertex x = queue.front();
    queue.pop_front();
    if (stop.contains(x.bits)) break;
    std::uint64_t m = free;
    while (m != 0) {
      const std::uint64_t low = m & (~m + 1);
      m ^= low;
      const Vertex y{x.bits ^ low};
      if (parent.contains(y.bits) || (blocked && blocked(y))) continue;
      const Stage prior = eo.first_stage(x, y);
      if (prior != Stage::none && prior != Stage::subcube) {
        throw DisciplineError("subcube edge was exposed by an earlier stage");
      }
      if (!eo.query(x, y, Stage::subcube)) continue;
      parent.emplace(y.bits, x.bits);
      queue.push_back(y);
    }
  }
  return parent;
}

std::vector<Vertex> trace(const std::unordered_map<std::uint64_t, std::uint64_t>& parent, Vertex b) {
  std::vector<Vertex> out{b};
  while (parent.at(out.back().bits) != out.back().bits) out.push_back(Vertex{parent.at(out.back().bits)});
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::optional<std::vector<Vertex>> subcube_connect(const SubcubeSpec& spec, Vertex a, Vertex b, EdgeOracle& eo,
                                                   const VertexFilter& blocked) {
  spec.check();
  require(spec.contains(a) && spec.contains(b), "endpoints outside the subcube");
  if (a == b) return std::vector<Vertex>{a};
  const auto parent = explore(spec, a, eo, {b.bits}, blocked);
  if (!parent.contains(b.bits)) return std::nullopt;
  return trace(parent, b);
}

std::optional<Link> find_link(const ConnectorPlan& plan, std::size_t r, EdgeOracle& eo, const VertexFilter& blocked) {
  require(r < plan.parts.size(), "link index out of range");
  const StitchPath& here = plan.parts[r];
  const StitchPath& next = plan.parts[(r + 1) % plan.parts.size()];
  auto usable = [&](const Connector& c) {
    return eo.query(c.u, c.mid, Stage::connector) && eo.query(c.mid, c.end, Stage::connector);
  };
  for (int k : plan.classes[r].to_vector()) {
    const SubcubeSpec cube = plan.cube_for(k);
    std::unordered_set<std::uint64_t> targets;
    std::unordered_map<std::uint64_t, Vertex> target_witness;
    for (Vertex u : next.w_plus) {
      const Connector c = make_connector(k, u);
      if ((blocked && blocked(c.end)) || !usable(c)) continue;
      targets.insert(c.end.bits);
      target_witness.emplace(c.end.bits, u);
    }
    if (targets.empty()) continue;
    for (Vertex u : here.w_minus) {
      const Connector c = make_connector(k, u);
      if (!usable(c)) continue;
      if (blocked && blocked(c.end)) continue;
      const auto parent = explore(cube, c.end, eo, targets, blocked);
      // Smallest target the search reached before stopping.
      std::optional<std::uint64_t> hit;
      for (const auto& [v, p] : parent) {
        if (targets.contains(v) && (!hit || v < *hit)) hit = v;
      }
      if (!hit) continue;
      const auto inner = subcube_connect(cube, c.end, Vertex{*hit}, eo, blocked);
      ensure(inner.has_value(), "component member became unreachable");
      return Link{k, u, target_witness.at(*hit), *inner};
    }
  }
  return std::nullopt;
}

std::vector<Vertex> assemble_cycle(const Pef& pef, const ConnectorPlan& plan, std::span<const std::optional<Link>> links,
                                   const EdgeOracle& eo) {
  const std::size_t s = plan.parts.size();
  require(links.size() == s, "one link per part is required");
  for (std::size_t r = 0; r < s; ++r) {
    if (!links[r]) throw PreconditionError("missing link for part " + std::to_string(r));
  }
  std::vector<Vertex> cycle;
  std::size_t interior = 0;
  for (std::size_t r = 0; r < s; ++r) {
    const PefPath& path = pef.paths()[static_cast<std::size_t>(plan.parts[r].path)];
    require(path.alive, "stitching a dead path");
    interior += path.seq.size() - 2 * static_cast<std::size_t>(pef.segment_len());
    const Link& in = *links[(r + s - 1) % s];
    const Link& out = *links[r];
    require(pef.tree_of(in.u_plus) == path.head && pef.tree_of(out.u_minus) == path.tail,
            "link witnesses are not on this path's trees");
    const auto up = pef.climb(in.u_plus);
    const auto down = pef.climb(out.u_minus);
    const auto from = std::find(path.seq.begin(), path.seq.end(), up.back());
    const auto to = std::find(path.seq.begin(), path.seq.end(), down.back());
    ensure(from < to && to != path.seq.end(), "tree climbs meet the path out of order");
    cycle.insert(cycle.end(), up.begin(), up.end());
    cycle.insert(cycle.end(), from + 1, to + 1);
    cycle.insert(cycle.end(), down.rbegin() + 1, down.rend());
    cycle.push_back(flip(out.u_minus, 1));
    cycle.insert(cycle.end(), out.inner.begin(), out.inner.end());
    cycle.push_back(flip(out.u_plus, 1));
  }

  std::unordered_set<std::uint64_t> seen;
  for (std::size_t x = 0; x < cycle.size(); ++x) {
    const Vertex a = cycle[x];
    const Vertex b = cycle[(x + 1) % cycle.size()];
    ensure(seen.insert(a.bits).second, "stitched cycle repeats a vertex");
    ensure(adjacent(a, b) && eo.exposure(a, b) == Exposure::open, "stitched cycle uses an unexposed or closed edge");
  }
  ensure(cycle.size() >= interior, "stitched cycle shorter than the interior it spans");
  return cycle;
}

}  // namespace hcube
