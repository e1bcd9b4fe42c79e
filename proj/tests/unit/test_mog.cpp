#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "hcube/errors.hpp"
#include "hcube/mog.hpp"

using namespace hcube;

namespace {

std::vector<Vertex> seq_of(std::initializer_list<std::initializer_list<int>> coords) {
  std::vector<Vertex> out;
  for (const auto& c : coords) out.push_back(from_coords(c));
  return out;
}

// P climbs 3-4-3-4, R climbs 3-4-3-4; {2,4} sits under P's tail and R's head.
struct MicroForest {
  Pef pef{6, 2};
  int p = pef.add_path(seq_of({{1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4}, {2, 3, 4, 5}}));
  int r = pef.add_path(seq_of({{2, 4, 6}, {2, 4, 5, 6}, {4, 5, 6}, {1, 4, 5, 6}}));
};

}  // namespace

TEST_CASE("a fresh path owns two segment trees") {
  MicroForest f;
  CHECK(f.pef.path_count() == 2);
  CHECK(f.pef.segment_count() == 4);
  CHECK(f.pef.interior() == 0);
  CHECK(f.pef.lowest_layer() == 3);
  const auto head = f.pef.segment(0);
  CHECK(std::vector<Vertex>(head.begin(), head.end()) == seq_of({{1, 2, 3}, {1, 2, 3, 4}}));
  CHECK(f.pef.tree_of(from_coords({2, 3, 4, 5})) == 1);
  CHECK(f.pef.path_of(from_coords({4, 5, 6})) == 1);
  f.pef.check_invariants();
  CHECK_THROWS_AS(f.pef.add_path(seq_of({{2}, {2, 3}, {2, 3, 4}, {2, 3, 4, 6}})), PreconditionError);
  CHECK_THROWS_AS(f.pef.add_path(seq_of({{1, 2, 3}, {1, 2}})), PreconditionError);
}

TEST_CASE("process_vertex with no revealed tree is a no-op") {
  MicroForest f;
  const ProcessRecord rec = process_vertex(f.pef, from_coords({5, 6}), {}, 1);
  CHECK(rec.rule == Rule::none);
  CHECK(f.pef.tree_of(from_coords({5, 6})) < 0);
}

TEST_CASE("process_vertex with one tree attaches a leaf") {
  MicroForest f;
  const Vertex v = from_coords({1, 2});
  const ProcessRecord rec = process_vertex(f.pef, v, {Revealed{0, from_coords({1, 2, 3})}}, 1);
  CHECK(rec.rule == Rule::attach);
  CHECK(f.pef.tree_of(v) == 0);
  CHECK(f.pef.climb(v) == seq_of({{1, 2}, {1, 2, 3}}));
  CHECK(f.pef.trees()[0].frontier == 2);
  f.pef.check_invariants();
}

TEST_CASE("process_vertex with both trees of one path flips a coin") {
  MicroForest f;
  const Vertex v = from_coords({2, 3});
  const ProcessRecord rec =
      process_vertex(f.pef, v, {Revealed{0, from_coords({1, 2, 3})}, Revealed{1, from_coords({2, 3, 4})}}, 1);
  CHECK(rec.rule == Rule::coin);
  CHECK((rec.tree == 0 || rec.tree == 1));
  CHECK(f.pef.tree_of(v) == rec.tree);
  CHECK(f.pef.path_count() == 2);
  f.pef.check_invariants();
}

TEST_CASE("B1 joins two paths through the merging vertex") {
  MicroForest f;
  const Vertex v = from_coords({2, 4});
  const ProcessRecord rec =
      process_vertex(f.pef, v, {Revealed{1, from_coords({2, 3, 4})}, Revealed{2, from_coords({2, 4, 6})}}, 1);
  CHECK(rec.rule == Rule::merge);
  CHECK(f.pef.path_count() == 1);
  CHECK(f.pef.segment_count() == 2);
  const PefPath& joined = f.pef.paths().back();
  CHECK(joined.seq == seq_of({{1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4}, {2, 4}, {2, 4, 6}, {2, 4, 5, 6}, {4, 5, 6}, {1, 4, 5, 6}}));
  // The untouched ends keep their trees.
  CHECK(joined.head == 0);
  CHECK(joined.tail == 3);
  CHECK(f.pef.interior() == 4);
  CHECK(f.pef.path_of(from_coords({2, 3, 4, 5})) < 0);
  REQUIRE(f.pef.merges().size() == 1);
  CHECK(f.pef.merges()[0].x == seq_of({{2, 3, 4}}));
  f.pef.check_invariants();
}

TEST_CASE("B1 climbs grown trees into the merged path") {
  MicroForest f;
  process_vertex(f.pef, from_coords({2, 3}), {Revealed{1, from_coords({2, 3, 4})}}, 1);
  process_vertex(f.pef, from_coords({2, 6}), {Revealed{2, from_coords({2, 4, 6})}}, 1);
  const Vertex v = from_coords({2});
  process_vertex(f.pef, v, {Revealed{1, from_coords({2, 3})}, Revealed{2, from_coords({2, 6})}}, 1);
  const PefPath& joined = f.pef.paths().back();
  CHECK(joined.seq == seq_of({{1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4}, {2, 3}, {2}, {2, 6}, {2, 4, 6}, {2, 4, 5, 6},
                              {4, 5, 6}, {1, 4, 5, 6}}));
  f.pef.check_invariants();
}

TEST_CASE("process_vertex rejects adjacency read through an unexposed edge") {
  MicroForest f;
  EdgeOracle eo(1, 6, 1.0);
  const std::vector<Revealed> seen{Revealed{0, from_coords({1, 2, 3})}};
  CHECK_THROWS_AS(process_vertex(f.pef, from_coords({1, 2}), seen, 1, &eo), DisciplineError);
  CHECK(eo.query(from_coords({1, 2}), from_coords({1, 2, 3}), Stage::grow));
  CHECK(process_vertex(f.pef, from_coords({1, 2}), seen, 1, &eo).rule == Rule::attach);
  CHECK_THROWS_AS(process_vertex(f.pef, from_coords({3}), {Revealed{0, from_coords({1, 2, 3})}}, 1), PreconditionError);
}

TEST_CASE("discard_path releases every owned vertex") {
  MicroForest f;
  process_vertex(f.pef, from_coords({1, 2}), {Revealed{0, from_coords({1, 2, 3})}}, 1);
  f.pef.discard_path(f.p);
  CHECK(f.pef.path_count() == 1);
  CHECK(f.pef.tree_of(from_coords({1, 2})) < 0);
  CHECK(f.pef.path_of(from_coords({1, 2, 3})) < 0);
  f.pef.check_invariants();
  CHECK_THROWS_AS(f.pef.discard_path(f.p), PreconditionError);
}

TEST_CASE("b_set follows the three-case layer rule") {
  ParameterSet ps = ParameterSet::desk(12, 6);
  const PartitionOracle po(3, ps.q1, ps.q2, ps.q3);
  auto check = [&](int i, auto member) {
    const auto bs = b_set(i, ps, po);
    std::size_t want = 0;
    for (int layer : {i + 1, i}) {
      for (Vertex v : layer_vertices(12, layer)) want += member(v) ? 1 : 0;
    }
    CHECK(bs.size() == want);
    for (std::size_t k = 1; k < bs.size(); ++k) {
      CHECK(layer_of(bs[k - 1]) >= layer_of(bs[k]));
      if (layer_of(bs[k - 1]) == layer_of(bs[k])) CHECK(bs[k - 1] < bs[k]);
    }
  };
  check(ps.m2 + 2, [&](Vertex v) { return po.class_of(v) == VClass::v3; });
  check(ps.m2, [&](Vertex v) { return po.class_of(v) == VClass::v3 && in_q0(v); });
  check(ps.m2 - 2, [&](Vertex v) { return in_q0(v); });
}

TEST_CASE("first iteration on an empty forest only adds the merged layer paths") {
  ParameterSet ps = ParameterSet::desk(12, 12);
  ps.p = 1;
  EdgeOracle eo(2, 12, 1.0);
  const PartitionOracle po(2, ps.q1, ps.q2, ps.q3);
  Pef pef(12, ps.pef_segment_len);
  const IterationStats st = mog_iteration(pef, ps.m4, ps, eo, po);
  CHECK(st.merges == 0);
  CHECK(st.attaches == 0);
  CHECK(st.coin_attaches == 0);
  CHECK(st.noops == st.b_size);
  CHECK(st.path_count == st.added_paths);
  for (int t : pef.alive_trees()) CHECK(pef.trees()[static_cast<std::size_t>(t)].grown == 0);
  pef.check_invariants(&eo);
  CHECK_THROWS_AS(mog_iteration(pef, ps.m4 - 1, ps, eo, po), PreconditionError);
  Pef low(12, ps.pef_segment_len);
  low.add_path(seq_of({{1, 2, 3}, {1, 2, 3, 4}, {2, 3, 4}, {2, 3, 4, 5}}));
  CHECK_THROWS_AS(mog_iteration(low, 4, ps, eo, po), PreconditionError);
}

TEST_CASE("run_mog at p=0 builds nothing") {
  ParameterSet ps = ParameterSet::desk(12, 6);
  ps.p = 0;
  EdgeOracle eo(1, 12, 0.0);
  const PartitionOracle po(1, ps.q1, ps.q2, ps.q3);
  const MogResult r = run_mog(ps, eo, po, ps.m1);
  for (const auto& st : r.iterations) {
    CHECK(st.merges + st.attaches + st.coin_attaches == 0);
    CHECK(st.path_count == 0);
  }
  CHECK(r.book.entries.empty());
}

TEST_CASE("run_mog down to m4 is a single iteration") {
  ParameterSet ps = ParameterSet::desk(12, 12);
  ps.p = 1;
  EdgeOracle eo(1, 12, 1.0);
  const PartitionOracle po(1, ps.q1, ps.q2, ps.q3);
  const MogResult r = run_mog(ps, eo, po, ps.m4);
  CHECK(r.iterations.size() == 1);
  CHECK(r.iterations[0].layer == ps.m4);
  CHECK_THROWS_AS(run_mog(ps, eo, po, ps.m1 + 1), PreconditionError);
}

TEST_CASE("desk runs are pinned") {
  struct Pin {
    int d;
    double p;
    std::vector<std::size_t> attaches;
    std::vector<std::size_t> paths;
  };
  const std::vector<Pin> pins{
      {14, 0.8, {0, 0, 52, 78, 258, 76}, {0, 1, 1, 1, 1, 1}},
      {12, 1.0, {0, 0, 24, 139, 65}, {0, 2, 2, 2, 2}},
  };
  for (const Pin& pin : pins) {
    ParameterSet ps = ParameterSet::desk(pin.d, pin.d * pin.p);
    ps.p = pin.p;
    EdgeOracle eo(1, pin.d, pin.p);
    const PartitionOracle po(1, ps.q1, ps.q2, ps.q3);
    const MogResult r = run_mog(ps, eo, po, ps.m1);
    std::vector<std::size_t> attaches, paths;
    for (const auto& st : r.iterations) {
      attaches.push_back(st.attaches);
      paths.push_back(st.path_count);
    }
    CHECK(attaches == pin.attaches);
    CHECK(paths == pin.paths);
    CHECK(r.book.entries.size() == 2);
  }
}

TEST_CASE("property: forest bookkeeping across seeded runs") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    for (double p : {0.5, 1.0}) {
      ParameterSet ps = ParameterSet::desk(12, 12 * p);
      ps.p = p;
      EdgeOracle eo(seed, 12, p);
      const PartitionOracle po(seed, ps.q1, ps.q2, ps.q3);
      std::size_t interior = 0;
      std::size_t paths = 0;
      run_mog(ps, eo, po, ps.m1, [&](const Pef& pef, const IterationStats& st) {
        pef.check_invariants(&eo);
        REQUIRE(st.interior >= interior);
        REQUIRE(st.path_count + st.merges == paths + st.added_paths);
        // Grown tree vertices sit strictly below their segment.
        for (int t : pef.alive_trees()) {
          const auto& tree = pef.trees()[static_cast<std::size_t>(t)];
          int seg_low = pef.dim() + 1;
          for (Vertex v : pef.segment(t)) seg_low = std::min(seg_low, layer_of(v));
          for (const auto& [bits, parent] : tree.parent) REQUIRE(layer_of(Vertex{bits}) < seg_low);
        }
        interior = st.interior;
        paths = st.path_count;
      });
    }
  }
}

TEST_CASE("extract_profile keeps identical supports whole") {
  const auto leaves = seq_of({{2, 3, 4, 5}, {2, 3, 4, 5}, {2, 3, 4, 5}});
  const LeafProfile lp = extract_profile(leaves, 3, 1);
  CHECK(lp.m.size() == 1);
  CHECK(lp.iset == CoordSet{2, 3, 4});
  CHECK_FALSE(lp.shortfall);
}

TEST_CASE("extract_profile keeps the larger of two disjoint groups") {
  const auto leaves = seq_of({{2, 3, 4}, {2, 3, 5}, {2, 3, 6}, {7, 8, 9}, {7, 8, 10}});
  const LeafProfile lp = extract_profile(leaves, 2, 3);
  CHECK(lp.m == seq_of({{2, 3, 4}, {2, 3, 5}, {2, 3, 6}}));
  CHECK(lp.iset == CoordSet{2, 3});
  CHECK_FALSE(lp.shortfall);
}

TEST_CASE("extract_profile reports a shortfall") {
  const auto leaves = seq_of({{1, 2, 3}, {1, 2, 4}});
  const LeafProfile lp = extract_profile(leaves, 4, 1);
  CHECK(lp.shortfall);
  CHECK(lp.m.size() == 1);
  CHECK(lp.iset.size() == 2);
  CHECK_THROWS_AS(extract_profile({}, 1, 1), PreconditionError);
}

TEST_CASE("property: extracted profiles stay inside the joint support") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<Vertex> leaves;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) leaves.push_back(Vertex{rng() & 0xFFFF});
    const int want = 1 + static_cast<int>(rng() % 6);
    const LeafProfile lp = extract_profile(leaves, want, 2);
    REQUIRE_FALSE(lp.m.empty());
    std::uint64_t joint = ~std::uint64_t{0};
    for (Vertex v : lp.m) joint &= v.bits;
    REQUIRE((lp.iset.mask() & ~joint) == 0);
    REQUIRE_FALSE(lp.iset.contains(1));
    REQUIRE(lp.iset.size() <= want);
  }
}

TEST_CASE("allocate_supports on one segment takes the first coordinates") {
  const std::vector<CoordSet> isets{CoordSet{3, 5, 7, 9}};
  const Allocation a = allocate_supports(isets, 2);
  REQUIRE(a.ok);
  CHECK(a.jsets[0] == CoordSet{3, 5});
}

TEST_CASE("allocate_supports splits a shared set in halves") {
  const std::vector<CoordSet> isets{CoordSet{2, 3, 4, 5}, CoordSet{2, 3, 4, 5}};
  const Allocation a = allocate_supports(isets, 2);
  REQUIRE(a.ok);
  CHECK(a.jsets[0] == CoordSet{2, 3});
  CHECK(a.jsets[1] == CoordSet{4, 5});
}

TEST_CASE("allocate_supports names the blocking pair") {
  const std::vector<CoordSet> isets{CoordSet{2, 3}, CoordSet{8, 9}, CoordSet{2, 3, 4}};
  const Allocation a = allocate_supports(isets, 2);
  CHECK_FALSE(a.ok);
  CHECK(a.blocked == 2);
  CHECK(a.blocker == 0);
}

TEST_CASE("allocate_supports prefers the best-scoring candidate") {
  const std::vector<CoordSet> isets{CoordSet{2, 3, 4}};
  const Allocation a = allocate_supports(isets, 1, [](std::size_t, const CoordSet& j) {
    return j.contains(4) ? std::size_t{5} : std::size_t{1};
  });
  CHECK(a.jsets[0] == CoordSet{4});
}

TEST_CASE("twelve segments with a sixth of the coordinates always fit") {
  // 12 disjoint picks of size d/72 use d/6 coordinates, exactly one I_S.
  const int d = 72;
  const int ws = d / 72;
  std::mt19937_64 rng(9);
  std::vector<int> coords;
  for (int c = 2; c <= 63; ++c) coords.push_back(c);
  for (int t = 0; t < 200; ++t) {
    std::vector<CoordSet> isets;
    for (int k = 0; k < 12; ++k) {
      std::shuffle(coords.begin(), coords.end(), rng);
      CoordSet s;
      for (int x = 0; x < d / 6; ++x) s.insert(coords[static_cast<std::size_t>(x)]);
      isets.push_back(s);
    }
    REQUIRE(12 * ws <= d / 6);
    const Allocation a = allocate_supports(isets, ws);
    REQUIRE(a.ok);
    CoordSet used;
    for (std::size_t k = 0; k < a.jsets.size(); ++k) {
      REQUIRE(a.jsets[k].size() == ws);
      REQUIRE((a.jsets[k] - isets[k]).size() == 0);
      REQUIRE((a.jsets[k] & used).size() == 0);
      used = used | a.jsets[k];
    }
  }
}

TEST_CASE("select_witnesses over a pinned run") {
  ParameterSet ps = ParameterSet::desk(12, 12);
  ps.p = 1;
  EdgeOracle eo(1, 12, 1.0);
  const PartitionOracle po(1, ps.q1, ps.q2, ps.q3);
  const MogResult r = run_mog(ps, eo, po, ps.m1);
  std::vector<int> trees;
  for (const auto& [t, entry] : r.book.entries) trees.push_back(t);
  std::sort(trees.begin(), trees.end());
  const WitnessSelection ws = select_witnesses(r.book, r.pef, trees, ps);
  REQUIRE(ws.sets.size() == ws.allocation.jsets.size());
  CoordSet seen;
  for (const auto& set : ws.sets) {
    CHECK(set.jset.size() <= ps.witness_support);
    CHECK((set.jset & seen).size() == 0);
    seen = seen | set.jset;
    for (Vertex w : set.witnesses) {
      CHECK(in_q0(w));
      CHECK(layer_of(w) == ps.m1);
      CHECK((w.bits & ~set.jset.mask()) == 0);
      CHECK(r.pef.tree_of(w) == set.tree);
    }
  }
  CHECK(seen == ws.jset);
}

namespace {

const auto all_edges = [](Vertex, Vertex) { return true; };

// Q_0 vertices in [lo, hi] under some tree vertex, plus the tree.
std::set<std::uint64_t> brute_below(const std::vector<Vertex>& tree, int d, int lo, int hi) {
  std::set<std::uint64_t> out;
  for (Vertex t : tree) out.insert(t.bits);
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << d); ++b) {
    const Vertex y{b};
    if (!in_q0(y) || layer_of(y) < lo || layer_of(y) > hi) continue;
    for (Vertex t : tree) {
      if ((b & ~t.bits) == 0) out.insert(b);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("agp with no retained vertices returns the tree") {
  const auto tree = seq_of({{2, 3, 4, 5}, {2, 3, 4, 6}});
  const VertexOracle none(1, 0.0);
  CHECK(agp_grow(tree, {}, 1, 3, all_edges, none) == tree);
}

TEST_CASE("agp blocked below the tree returns the tree") {
  const auto tree = seq_of({{2, 3, 4}});
  const auto blocked = seq_of({{2, 3}, {2, 4}, {3, 4}});
  const VertexOracle all(1, 1.0);
  CHECK(agp_grow(tree, blocked, 1, 2, all_edges, all) == tree);
}

TEST_CASE("agp on full H matches brute reachability") {
  const int d = 8;
  const VertexOracle all(1, 1.0);
  for (int hi : {2, 3, 4}) {
    const int lo = 1;
    std::vector<Vertex> tree;
    for (Vertex v : layer_vertices(d, hi + 1)) {
      if (in_q0(v) && v.bits % 7 == 0) tree.push_back(v);
    }
    const auto grown = agp_grow(tree, {}, lo, hi, all_edges, all);
    const auto want = brute_below(tree, d, lo, hi);
    CHECK(std::set<std::uint64_t>(
              [&] { std::set<std::uint64_t> s; for (Vertex v : grown) s.insert(v.bits); return s; }()) == want);
    const AgpPair pair = agp_grow(tree, tree, {}, lo, hi, all_edges, all);
    CHECK(pair.first == pair.second);
  }
}

TEST_CASE("property: agp is monotone in blocked set and open edges") {
  std::mt19937_64 rng(17);
  const int d = 10;
  for (int t = 0; t < 60; ++t) {
    const EdgeOracle eo(rng(), d, 0.7, false);
    const VertexOracle keep(rng(), 0.8);
    std::vector<Vertex> tree;
    for (Vertex v : layer_vertices(d, 5)) {
      if (in_q0(v) && rng() % 6 == 0) tree.push_back(v);
    }
    std::vector<Vertex> small_k, big_k;
    for (int layer = 2; layer <= 4; ++layer) {
      for (Vertex v : layer_vertices(d, layer)) {
        const auto roll = rng() % 10;
        if (roll == 0) small_k.push_back(v);
        if (roll <= 2) big_k.push_back(v);
      }
    }
    const auto open = eo.predicate();
    const std::uint64_t salt = rng();
    const EdgePredicate thinner = [&](Vertex a, Vertex b) { return open(a, b) && (mix64(salt ^ a.bits ^ (b.bits << 20)) & 3) != 0; };
    auto as_set = [](const std::vector<Vertex>& vs) {
      std::set<std::uint64_t> s;
      for (Vertex v : vs) s.insert(v.bits);
      return s;
    };
    const auto base = as_set(agp_grow(tree, small_k, 2, 4, open, keep));
    const auto blocked_more = as_set(agp_grow(tree, big_k, 2, 4, open, keep));
    const auto fewer_edges = as_set(agp_grow(tree, small_k, 2, 4, thinner, keep));
    REQUIRE(std::includes(base.begin(), base.end(), blocked_more.begin(), blocked_more.end()));
    REQUIRE(std::includes(base.begin(), base.end(), fewer_edges.begin(), fewer_edges.end()));
  }
}
