#include "hcube/mog.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <unordered_set>

#include "hcube/dfs_merge.hpp"
#include "hcube/errors.hpp"
#include "hcube/layer_cover.hpp"

namespace hcube {

std::size_t PefTree::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

Pef::Pef(int d, int segment_len) : d_(d), segment_len_(segment_len) {
  check_dim(d);
  require(d <= kEnumLimit, "forest bookkeeping is dense; dimension too large");
  require(segment_len >= 1, "segment length must be positive");
  const std::size_t n = std::size_t{1} << d;
  path_of_.assign(n, -1);
  tree_of_.assign(n, -1);
}

std::size_t Pef::path_count() const {
  return static_cast<std::size_t>(std::count_if(paths_.begin(), paths_.end(), [](const PefPath& p) { return p.alive; }));
}

std::size_t Pef::interior() const {
  std::size_t n = 0;
  for (const auto& p : paths_) {
    if (p.alive) n += p.seq.size() - 2 * static_cast<std::size_t>(segment_len_);
  }
  return n;
}

int Pef::lowest_layer() const {
  int low = d_ + 1;
  for (const auto& p : paths_) {
    if (!p.alive) continue;
    for (Vertex v : p.seq) low = std::min(low, layer_of(v));
  }
  for (const auto& t : trees_) {
    if (t.alive) low = std::min(low, t.frontier);
  }
  return low;
}

std::span<const Vertex> Pef::segment(int tree) const {
  const PefTree& t = trees_[static_cast<std::size_t>(tree)];
  const auto& seq = paths_[static_cast<std::size_t>(t.path)].seq;
  const auto len = static_cast<std::size_t>(segment_len_);
  if (t.head) return {seq.data(), len};
  return {seq.data() + (seq.size() - len), len};
}

std::vector<int> Pef::alive_trees() const {
  std::vector<int> out;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (trees_[t].alive) out.push_back(static_cast<int>(t));
  }
  return out;
}

int Pef::add_path(std::vector<Vertex> seq) {
  require(seq.size() >= 2 * static_cast<std::size_t>(segment_len_), "path too short for two segments");
  for (std::size_t k = 0; k < seq.size(); ++k) {
    check_vertex(seq[k], d_);
    require(path_of_[seq[k].bits] < 0 && tree_of_[seq[k].bits] < 0, "path vertex already owned");
    require(k == 0 || adjacent(seq[k - 1], seq[k]), "path steps must be cube edges");
  }
  const int id = static_cast<int>(paths_.size());
  for (Vertex v : seq) path_of_[v.bits] = id;
  paths_.push_back(PefPath{std::move(seq), -1, -1, true});
  for (bool head : {true, false}) {
    const int tid = static_cast<int>(trees_.size());
    PefTree t;
    t.path = id;
    t.head = head;
    t.layers.assign(static_cast<std::size_t>(d_) + 1, {});
    trees_.push_back(std::move(t));
    PefTree& tree = trees_.back();
    tree.frontier = d_ + 1;
    for (Vertex v : segment(tid)) {
      require(tree_of_[v.bits] < 0, "path revisits a vertex");
      tree_of_[v.bits] = tid;
      tree.layers[static_cast<std::size_t>(layer_of(v))].push_back(v);
      tree.frontier = std::min(tree.frontier, layer_of(v));
    }
    (head ? paths_[static_cast<std::size_t>(id)].head : paths_[static_cast<std::size_t>(id)].tail) = tid;
  }
  return id;
}

void Pef::attach(int tree, Vertex v, Vertex parent) {
  PefTree& t = trees_[static_cast<std::size_t>(tree)];
  require(t.alive, "attach to a dead tree");
  require(tree_of_[parent.bits] == tree, "parent outside the tree");
  require(path_of_[v.bits] < 0 && tree_of_[v.bits] < 0, "attached vertex already owned");
  require(adjacent(v, parent) && layer_of(v) + 1 == layer_of(parent), "leaf must sit one layer below its parent");
  t.parent.emplace(v.bits, parent);
  t.layers[static_cast<std::size_t>(layer_of(v))].push_back(v);
  t.frontier = std::min(t.frontier, layer_of(v));
  t.grown++;
  tree_of_[v.bits] = tree;
}

std::vector<Vertex> Pef::climb(Vertex v) const {
  const int tid = tree_of_[v.bits];
  require(tid >= 0, "climb from a vertex outside every tree");
  const PefTree& t = trees_[static_cast<std::size_t>(tid)];
  std::vector<Vertex> out{v};
  while (path_of_[out.back().bits] < 0) {
    const auto it = t.parent.find(out.back().bits);
    ensure(it != t.parent.end(), "grown vertex without a parent");
    out.push_back(it->second);
  }
  return out;
}

void Pef::release_tree(int tree) {
  PefTree& t = trees_[static_cast<std::size_t>(tree)];
  for (const auto& layer : t.layers) {
    for (Vertex v : layer) tree_of_[v.bits] = -1;
  }
  t.alive = false;
  t.parent.clear();
}

int Pef::merge(int tree_x, Vertex w_x, int tree_y, Vertex w_y, Vertex v) {
  const PefTree& tx = trees_[static_cast<std::size_t>(tree_x)];
  const PefTree& ty = trees_[static_cast<std::size_t>(tree_y)];
  require(tx.alive && ty.alive, "merge through a dead tree");
  require(tx.path != ty.path, "merging trees must belong to distinct paths");
  require(tree_of_[w_x.bits] == tree_x && tree_of_[w_y.bits] == tree_y, "merge anchors outside their trees");
  require(path_of_[v.bits] < 0 && tree_of_[v.bits] < 0, "merging vertex already owned");
  require(adjacent(v, w_x) && adjacent(v, w_y), "merging vertex not adjacent to both trees");
  const std::size_t before = path_count();

  MergeEvent ev;
  ev.v = v;
  ev.tree_x = tree_x;
  ev.tree_y = tree_y;
  ev.x = climb(w_x);
  ev.y = climb(w_y);
  ev.path_p = tx.path;
  ev.path_r = ty.path;

  // P runs into its merged segment, R runs out of its merged segment.
  std::vector<Vertex> pseq = paths_[static_cast<std::size_t>(tx.path)].seq;
  std::vector<Vertex> rseq = paths_[static_cast<std::size_t>(ty.path)].seq;
  if (tx.head) std::reverse(pseq.begin(), pseq.end());
  if (!ty.head) std::reverse(rseq.begin(), rseq.end());
  const auto s_at = std::find(pseq.begin(), pseq.end(), ev.x.back());
  const auto r_at = std::find(rseq.begin(), rseq.end(), ev.y.back());
  ensure(s_at != pseq.end() && r_at != rseq.end(), "tree climb left its path");

  std::vector<Vertex> joined(pseq.begin(), s_at + 1);
  joined.insert(joined.end(), ev.x.rbegin() + 1, ev.x.rend());
  joined.push_back(v);
  joined.insert(joined.end(), ev.y.begin(), ev.y.end() - 1);
  joined.insert(joined.end(), r_at, rseq.end());

  const int keep_p = tx.head ? paths_[static_cast<std::size_t>(tx.path)].tail : paths_[static_cast<std::size_t>(tx.path)].head;
  const int keep_r = ty.head ? paths_[static_cast<std::size_t>(ty.path)].tail : paths_[static_cast<std::size_t>(ty.path)].head;
  for (int pid : {tx.path, ty.path}) {
    auto& p = paths_[static_cast<std::size_t>(pid)];
    for (Vertex u : p.seq) path_of_[u.bits] = -1;
    p.alive = false;
  }
  release_tree(tree_x);
  release_tree(tree_y);

  const int id = static_cast<int>(paths_.size());
  for (Vertex u : joined) path_of_[u.bits] = id;
  paths_.push_back(PefPath{std::move(joined), keep_p, keep_r, true});
  auto& head = trees_[static_cast<std::size_t>(keep_p)];
  auto& tail = trees_[static_cast<std::size_t>(keep_r)];
  head.path = id;
  head.head = true;
  tail.path = id;
  tail.head = false;
  ev.result = id;
  merges_.push_back(std::move(ev));
  ensure(path_count() + 1 == before, "merge must remove exactly one path");
  return id;
}

void Pef::discard_path(int path) {
  auto& p = paths_[static_cast<std::size_t>(path)];
  require(p.alive, "discarding a dead path");
  release_tree(p.head);
  release_tree(p.tail);
  for (Vertex u : p.seq) path_of_[u.bits] = -1;
  p.alive = false;
}

void Pef::check_invariants(const EdgeOracle* eo) const {
  auto open_edge = [&](Vertex a, Vertex b) { return eo == nullptr || eo->exposure(a, b) == Exposure::open; };
  std::size_t path_vertices = 0;
  std::size_t tree_vertices = 0;
  const auto len = static_cast<std::size_t>(segment_len_);
  for (std::size_t pid = 0; pid < paths_.size(); ++pid) {
    const PefPath& p = paths_[pid];
    if (!p.alive) continue;
    ensure(p.seq.size() >= 2 * len, "path shorter than its two segments");
    for (std::size_t k = 0; k < p.seq.size(); ++k) {
      ensure(path_of_[p.seq[k].bits] == static_cast<int>(pid), "path vertex owned elsewhere");
      if (k > 0) {
        ensure(adjacent(p.seq[k - 1], p.seq[k]), "path step is not a cube edge");
        ensure(open_edge(p.seq[k - 1], p.seq[k]), "path uses an unexposed or closed edge");
      }
    }
    path_vertices += p.seq.size();
    for (int tid : {p.head, p.tail}) {
      ensure(tid >= 0 && trees_[static_cast<std::size_t>(tid)].alive, "segment without a live tree");
      const PefTree& t = trees_[static_cast<std::size_t>(tid)];
      ensure(t.path == static_cast<int>(pid) && t.head == (tid == p.head), "tree points at the wrong segment");
    }
  }
  for (std::size_t tid = 0; tid < trees_.size(); ++tid) {
    const PefTree& t = trees_[tid];
    if (!t.alive) continue;
    ensure(paths_[static_cast<std::size_t>(t.path)].alive, "live tree on a dead path");
    const auto seg = segment(static_cast<int>(tid));
    int seg_low = d_ + 1;
    for (Vertex v : seg) {
      ensure(tree_of_[v.bits] == static_cast<int>(tid), "segment vertex outside its tree");
      seg_low = std::min(seg_low, layer_of(v));
    }
    std::size_t count = 0;
    for (const auto& layer : t.layers) {
      for (Vertex v : layer) {
        ++count;
        ensure(tree_of_[v.bits] == static_cast<int>(tid), "tree vertex owned elsewhere");
        const bool on_segment = std::find(seg.begin(), seg.end(), v) != seg.end();
        if (on_segment) continue;
        ensure(path_of_[v.bits] < 0, "tree meets a path outside its segment");
        ensure(layer_of(v) < seg_low, "grown vertex not below its segment");
        const auto it = t.parent.find(v.bits);
        ensure(it != t.parent.end(), "grown vertex without a parent");
        ensure(tree_of_[it->second.bits] == static_cast<int>(tid), "parent outside the tree");
        ensure(adjacent(v, it->second) && layer_of(it->second) == layer_of(v) + 1, "parent link is not a downward step");
        ensure(open_edge(v, it->second), "tree uses an unexposed or closed edge");
      }
    }
    ensure(count == len + t.grown && t.parent.size() == t.grown, "tree size bookkeeping drifted");
    tree_vertices += count;
  }
  const auto owned_paths = static_cast<std::size_t>(std::count_if(path_of_.begin(), path_of_.end(), [](int x) { return x >= 0; }));
  const auto owned_trees = static_cast<std::size_t>(std::count_if(tree_of_.begin(), tree_of_.end(), [](int x) { return x >= 0; }));
  ensure(owned_paths == path_vertices, "paths overlap or ownership leaked");
  ensure(owned_trees == tree_vertices, "trees overlap or ownership leaked");
}

ProcessRecord process_vertex(Pef& pef, Vertex v, std::vector<Revealed> revealed, std::uint64_t seed,
                             const EdgeOracle* eo) {
  std::sort(revealed.begin(), revealed.end(),
            [](const Revealed& a, const Revealed& b) { return std::pair(a.tree, a.at) < std::pair(b.tree, b.at); });
  revealed.erase(std::unique(revealed.begin(), revealed.end(),
                             [](const Revealed& a, const Revealed& b) { return a.tree == b.tree; }),
                 revealed.end());
  for (const Revealed& r : revealed) {
    require(r.tree >= 0 && pef.trees()[static_cast<std::size_t>(r.tree)].alive, "revealed tree is not alive");
    require(pef.tree_of(r.at) == r.tree && adjacent(v, r.at) && layer_of(r.at) == layer_of(v) + 1,
            "revealed vertex is not a tree vertex directly above");
    if (eo != nullptr && eo->exposure(v, r.at) != Exposure::open) {
      throw DisciplineError("tree adjacency read through an edge that was never exposed open");
    }
  }

  ProcessRecord rec;
  rec.v = v;
  rec.trees_seen = revealed.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < revealed.size(); ++a) {
    for (std::size_t b = a + 1; b < revealed.size(); ++b) {
      const auto& ta = pef.trees()[static_cast<std::size_t>(revealed[a].tree)];
      const auto& tb = pef.trees()[static_cast<std::size_t>(revealed[b].tree)];
      if (ta.path != tb.path) pairs.emplace_back(a, b);
    }
  }
  if (!pairs.empty()) {
    const auto [a, b] = pairs[prf(seed, Stream::merge_pick, v.bits) % pairs.size()];
    rec.rule = Rule::merge;
    rec.tree = revealed[a].tree;
    rec.other = revealed[b].tree;
    pef.merge(revealed[a].tree, revealed[a].at, revealed[b].tree, revealed[b].at, v);
    return rec;
  }
  ensure(revealed.size() <= 2, "three trees always contain a mergeable pair");
  if (revealed.size() == 2) {
    const Revealed& r = revealed[prf(seed, Stream::grow_coin, v.bits) & 1U];
    rec.rule = Rule::coin;
    rec.tree = r.tree;
    pef.attach(r.tree, v, r.at);
  } else if (revealed.size() == 1) {
    rec.rule = Rule::attach;
    rec.tree = revealed[0].tree;
    pef.attach(revealed[0].tree, v, revealed[0].at);
  }
  return rec;
}

std::vector<Vertex> b_set(int i, const ParameterSet& ps, const PartitionOracle& po) {
  auto member = [&](Vertex v) {
    if (i >= ps.m2 + 1) return po.class_of(v) == VClass::v3;
    if (i == ps.m2) return po.class_of(v) == VClass::v3 && in_q0(v);
    return in_q0(v);
  };
  std::vector<Vertex> out;
  for (int layer : {i + 1, i}) {
    for (Vertex v : layer_vertices(ps.d, layer)) {
      if (member(v)) out.push_back(v);
    }
  }
  return out;
}

IterationStats mog_iteration(Pef& pef, int i, const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po) {
  if (i % 2 != 0 || i < ps.m1 || i > ps.m4 || i + 1 > ps.d) throw PreconditionError("iteration layer out of bounds");
  require(pef.dim() == ps.d, "forest and parameters disagree on d");
  require(pef.lowest_layer() >= i + 2, "forest reaches below the next layer pair");

  IterationStats st;
  st.layer = i;
  std::vector<int> frontier;
  for (int t : pef.alive_trees()) {
    if (pef.trees()[static_cast<std::size_t>(t)].frontier == i + 2) frontier.push_back(t);
  }
  std::unordered_set<int> gained;

  const auto bs = b_set(i, ps, po);
  st.b_size = bs.size();
  std::vector<Revealed> revealed;
  for (Vertex v : bs) {
    revealed.clear();
    for (int c = 1; c <= ps.d; ++c) {
      if (has_coord(v, c)) continue;
      const Vertex w{v.bits | coord_bit(c)};
      // Below m2 growth stays inside Q_0; Q_1 is left to the stitching subcubes.
      if (i < ps.m2 && !in_q0(w)) continue;
      const int t = pef.tree_of(w);
      if (t >= 0 && eo.query(v, w, Stage::grow)) revealed.push_back(Revealed{t, w});
    }
    const ProcessRecord rec = process_vertex(pef, v, revealed, eo.seed(), &eo);
    switch (rec.rule) {
      case Rule::merge:
        st.merges++;
        st.merge_trees_seen += rec.trees_seen;
        break;
      case Rule::coin:
        st.coin_attaches++;
        gained.insert(rec.tree);
        break;
      case Rule::attach:
        st.attaches++;
        gained.insert(rec.tree);
        break;
      case Rule::none:
        st.noops++;
        break;
    }
  }

  for (int t : frontier) {
    const PefTree& tree = pef.trees()[static_cast<std::size_t>(t)];
    if (!tree.alive || gained.contains(t)) continue;
    st.stalled++;
    if (ps.discard_stalled) {
      pef.discard_path(tree.path);
      st.discarded++;
    }
  }

  if (i >= ps.m3) {
    const LayerCover lc = short_path_cover(i, ps, eo, po);
    for (const auto& c : lc.cover.cycles) {
      if (c.size() > st.longest_cover_cycle.size()) st.longest_cover_cycle = c;
    }
    const MergeOutcome mo = merge_layer(lc.cover.family, i, ps, eo, po);
    for (const auto& path : mo.realized.family.paths) {
      if (path.size() < 2 * static_cast<std::size_t>(ps.pef_segment_len)) continue;
      pef.add_path(path);
      st.added_paths++;
    }
  }
  st.interior = pef.interior();
  st.path_count = pef.path_count();
  return st;
}

LeafProfile extract_profile(std::span<const Vertex> leaves, int iset_size, double leaf_target) {
  LeafProfile out;
  std::vector<Vertex> pool(leaves.begin(), leaves.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  require(!pool.empty(), "no leaves to profile");

  std::array<std::size_t, kMaxDim + 2> count{};
  for (Vertex v : pool) {
    for (int c = 1; c <= kMaxDim; ++c) count[static_cast<std::size_t>(c)] += has_coord(v, c) ? 1 : 0;
  }
  std::vector<char> kept(pool.size(), 1);
  std::size_t n = pool.size();
  auto joint = [&] {
    CoordSet j;
    for (int c = 2; c <= kMaxDim; ++c) {
      if (count[static_cast<std::size_t>(c)] == n) j.insert(c);
    }
    return j;
  };
  while (joint().size() < iset_size && n > 1) {
    std::size_t best = pool.size();
    long best_gain = -1;
    std::size_t best_overlap = 0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (!kept[k]) continue;
      long gain = 0;
      std::size_t overlap = 0;
      for (int c = 1; c <= kMaxDim; ++c) {
        const std::size_t cc = count[static_cast<std::size_t>(c)];
        if (has_coord(pool[k], c)) {
          overlap += cc - 1;
        } else if (c != 1 && cc == n - 1) {
          ++gain;
        }
      }
      // Largest gain first; among equals drop the leaf least like the rest.
      if (gain > best_gain || (gain == best_gain && overlap < best_overlap)) {
        best = k;
        best_gain = gain;
        best_overlap = overlap;
      }
    }
    kept[best] = 0;
    --n;
    for (int c = 1; c <= kMaxDim; ++c) count[static_cast<std::size_t>(c)] -= has_coord(pool[best], c) ? 1 : 0;
  }
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (kept[k]) out.m.push_back(pool[k]);
  }
  const CoordSet j = joint();
  for (int c : j.to_vector()) {
    if (out.iset.size() == iset_size) break;
    out.iset.insert(c);
  }
  out.shortfall = out.iset.size() < iset_size || static_cast<double>(out.m.size()) < leaf_target;
  return out;
}

LeafProfile leaf_profile(const Pef& pef, int tree, int target_layer, const ParameterSet& ps) {
  const PefTree& t = pef.trees()[static_cast<std::size_t>(tree)];
  require(t.alive, "profile of a dead tree");
  require(target_layer >= 0 && target_layer <= pef.dim(), "target layer outside the cube");
  std::vector<Vertex> leaves;
  for (Vertex v : t.layers[static_cast<std::size_t>(target_layer)]) {
    if (in_q0(v)) leaves.push_back(v);
  }
  if (leaves.empty()) throw PreconditionError("tree has no leaves at the target layer");
  return extract_profile(leaves, ps.iset_size, ps.leaf_target);
}

MogResult run_mog(const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po, int down_to,
                  const MogObserver& observer) {
  require(down_to % 2 == 0 && down_to >= ps.m1 && down_to <= ps.m4, "down_to must be even and within [m1, m4]");
  MogResult out{Pef(ps.d, ps.pef_segment_len), {}, {}};
  out.book.layer = ps.m2;
  for (int i = ps.m4; i >= down_to; i -= 2) {
    const std::size_t before = out.pef.interior();
    IterationStats st = mog_iteration(out.pef, i, ps, eo, po);
    // Discarding stalled paths is the only way interior can drop.
    ensure(ps.discard_stalled || st.interior >= before, "interior shrank during an iteration");
    out.pef.check_invariants(&eo);
    if (i == ps.m2) {
      for (int t : out.pef.alive_trees()) {
        const auto& layer = out.pef.trees()[static_cast<std::size_t>(t)].layers[static_cast<std::size_t>(ps.m2)];
        if (std::none_of(layer.begin(), layer.end(), [](Vertex v) { return in_q0(v); })) continue;
        out.book.entries[t].profile = leaf_profile(out.pef, t, ps.m2, ps);
      }
    }
    if (observer) observer(out.pef, st);
    out.iterations.push_back(st);
  }
  return out;
}

Allocation allocate_supports(std::span<const CoordSet> isets, int ws, const WitnessScore& score) {
  require(ws >= 0, "witness support size must be non-negative");
  Allocation out;
  CoordSet used;
  for (std::size_t k = 0; k < isets.size(); ++k) {
    const std::vector<int> avail = (isets[k] - used).to_vector();
    if (static_cast<int>(avail.size()) < ws) {
      out.ok = false;
      out.blocked = static_cast<int>(k);
      int most = -1;
      for (std::size_t j = 0; j < out.jsets.size(); ++j) {
        const int shared = (out.jsets[j] & isets[k]).size();
        if (shared > most) {
          most = shared;
          out.blocker = static_cast<int>(j);
        }
      }
      return out;
    }
    CoordSet pick;
    for (int c = 0; c < ws; ++c) pick.insert(avail[static_cast<std::size_t>(c)]);
    constexpr std::uint64_t kScanLimit = 4096;
    if (score && ws > 0 && binomial(static_cast<int>(avail.size()), ws) <= kScanLimit) {
      std::vector<int> idx(static_cast<std::size_t>(ws));
      for (int c = 0; c < ws; ++c) idx[static_cast<std::size_t>(c)] = c;
      std::size_t best = score(k, pick);
      const int n = static_cast<int>(avail.size());
      while (true) {
        int pos = ws - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - ws + pos) --pos;
        if (pos < 0) break;
        idx[static_cast<std::size_t>(pos)]++;
        for (int q = pos + 1; q < ws; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
        CoordSet cand;
        for (int x : idx) cand.insert(avail[static_cast<std::size_t>(x)]);
        const std::size_t s = score(k, cand);
        if (s > best) {
          best = s;
          pick = cand;
        }
      }
    }
    used = used | pick;
    out.jsets.push_back(pick);
  }
  return out;
}

namespace {

std::vector<Vertex> witness_leaves(const Pef& pef, int tree, const CoordSet& j, const ParameterSet& ps) {
  std::vector<Vertex> out;
  if (ps.m1 < 0 || ps.m1 > pef.dim()) return out;
  const std::uint64_t mask = j.mask();
  for (Vertex v : pef.trees()[static_cast<std::size_t>(tree)].layers[static_cast<std::size_t>(ps.m1)]) {
    if (in_q0(v) && (v.bits & ~mask) == 0) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  if (static_cast<double>(out.size()) > ps.witness_count) out.resize(static_cast<std::size_t>(ps.witness_count));
  return out;
}

}  // namespace

WitnessSelection select_witnesses(const LeafBook& book, const Pef& pef, std::span<const int> trees,
                                  const ParameterSet& ps) {
  std::vector<CoordSet> isets;
  for (int t : trees) {
    require(pef.trees()[static_cast<std::size_t>(t)].alive, "witnesses for a dead tree");
    const auto it = book.entries.find(t);
    isets.push_back(it == book.entries.end() ? CoordSet{} : it->second.profile.iset);
  }
  auto score = [&](std::size_t k, const CoordSet& j) {
    return witness_leaves(pef, trees[k], j, ps).size();
  };
  WitnessSelection out;
  out.allocation = allocate_supports(isets, ps.witness_support, score);
  for (std::size_t k = 0; k < out.allocation.jsets.size(); ++k) {
    const CoordSet& j = out.allocation.jsets[k];
    out.sets.push_back(WitnessSet{trees[k], j, witness_leaves(pef, trees[k], j, ps)});
    out.jset = out.jset | j;
  }
  return out;
}

std::vector<Vertex> agp_grow(std::span<const Vertex> tree, std::span<const Vertex> blocked, int lo, int hi,
                             const EdgePredicate& open, const VertexOracle& retained) {
  std::unordered_set<std::uint64_t> block;
  for (Vertex v : blocked) block.insert(v.bits);
  std::unordered_set<std::uint64_t> seen;
  std::deque<Vertex> queue;
  for (Vertex v : tree) {
    if (seen.insert(v.bits).second) queue.push_back(v);
  }
  while (!queue.empty()) {
    const Vertex x = queue.front();
    queue.pop_front();
    std::uint64_t m = x.bits;
    while (m != 0) {
      const std::uint64_t low = m & (~m + 1);
      m ^= low;
      const Vertex y{x.bits ^ low};
      const int layer = layer_of(y);
      if (!in_q0(y) || layer < lo || layer > hi) continue;
      if (seen.contains(y.bits) || block.contains(y.bits)) continue;
      if (!retained.retained(y) || !open(x, y)) continue;
      seen.insert(y.bits);
      queue.push_back(y);
    }
  }
  std::vector<Vertex> out;
  out.reserve(seen.size());
  for (std::uint64_t b : seen) out.push_back(Vertex{b});
  std::sort(out.begin(), out.end());
  return out;
}

AgpPair agp_grow(std::span<const Vertex> t1, std::span<const Vertex> t2, std::span<const Vertex> blocked, int lo,
                 int hi, const EdgePredicate& open, const VertexOracle& retained) {
  return AgpPair{agp_grow(t1, blocked, lo, hi, open, retained), agp_grow(t2, blocked, lo, hi, open, retained)};
}

}  // namespace hcube
