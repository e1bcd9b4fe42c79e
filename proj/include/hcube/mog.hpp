#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/params.hpp"
#include "hcube/percolation.hpp"

namespace hcube {

struct PefPath {
  std::vector<Vertex> seq;
  int head = -1;  // tree on the first segment_len vertices
  int tail = -1;  // tree on the last segment_len vertices
  bool alive = true;
};

struct PefTree {
  int path = -1;
  bool head = true;
  bool alive = true;
  int frontier = 0;  // lowest layer holding a vertex
  std::unordered_map<std::uint64_t, Vertex> parent;  // grown vertices only
  std::vector<std::vector<Vertex>> layers;            // every vertex, segment included
  std::size_t grown = 0;

  std::size_t size() const;
};

struct MergeEvent {
  Vertex v;
  int tree_x = -1;
  int tree_y = -1;
  std::vector<Vertex> x;  // v's parent up to the segment vertex of tree_x
  std::vector<Vertex> y;
  int path_p = -1;
  int path_r = -1;
  int result = -1;
};

// Paths, their end segments and one downward tree per segment. Ownership is
// tracked densely, so every vertex belongs to at most one path and one tree.
class Pef {
 public:
  Pef(int d, int segment_len);

  int dim() const { return d_; }
  int segment_len() const { return segment_len_; }
  const std::vector<PefPath>& paths() const { return paths_; }
  const std::vector<PefTree>& trees() const { return trees_; }
  const std::vector<MergeEvent>& merges() const { return merges_; }
  int path_of(Vertex v) const { return path_of_[v.bits]; }
  int tree_of(Vertex v) const { return tree_of_[v.bits]; }

  std::size_t path_count() const;
  std::size_t segment_count() const { return 2 * path_count(); }
  std::size_t interior() const;
  // Lowest layer touched by any alive path or tree; d + 1 when empty.
  int lowest_layer() const;
  std::span<const Vertex> segment(int tree) const;
  std::vector<int> alive_trees() const;

  // Adds a path whose trees are its two segments; returns its id.
  int add_path(std::vector<Vertex> seq);
  void attach(int tree, Vertex v, Vertex parent);
  // From a tree vertex up to (and including) the first segment vertex.
  std::vector<Vertex> climb(Vertex v) const;
  // Joins the paths of two trees through v; w_x, w_y are v's tree neighbours.
  int merge(int tree_x, Vertex w_x, int tree_y, Vertex w_y, Vertex v);
  // Drops the path together with both of its trees.
  void discard_path(int path);

  // Throws InvariantError on any broken structural property. When an oracle
  // is given, every path and tree edge must also be exposed and open.
  void check_invariants(const EdgeOracle* eo = nullptr) const;

 private:
  void release_tree(int tree);

  int d_;
  int segment_len_;
  std::vector<PefPath> paths_;
  std::vector<PefTree> trees_;
  std::vector<int> path_of_;
  std::vector<int> tree_of_;
  std::vector<MergeEvent> merges_;
};

enum class Rule : std::uint8_t { none, merge, coin, attach };

// A tree seen from v through an open edge, with its smallest such vertex.
struct Revealed {
  int tree = -1;
  Vertex at;
};

struct ProcessRecord {
  Vertex v;
  Rule rule = Rule::none;
  int tree = -1;   // attach target, or the first merged tree
  int other = -1;  // second merged tree
  std::size_t trees_seen = 0;
};

// Rules B1 to B3 for one vertex given the trees it sees. With an oracle, every
// revealed edge must already be exposed and open.
ProcessRecord process_vertex(Pef& pef, Vertex v, std::vector<Revealed> revealed, std::uint64_t seed,
                             const EdgeOracle* eo = nullptr);

struct IterationStats {
  int layer = 0;
  std::size_t b_size = 0;
  std::size_t merges = 0;
  std::size_t coin_attaches = 0;
  std::size_t attaches = 0;
  std::size_t noops = 0;
  std::size_t stalled = 0;    // trees at the frontier that gained nothing
  std::size_t discarded = 0;  // paths dropped with their stalled trees
  std::size_t added_paths = 0;
  std::size_t merge_trees_seen = 0;
  std::size_t interior = 0;
  std::size_t path_count = 0;
  std::vector<Vertex> longest_cover_cycle;  // longest M1 + M2 cycle before cutting
};

// B_i for the iteration on the pair (i, i+1): layer i+1 first, each ascending.
std::vector<Vertex> b_set(int i, const ParameterSet& ps, const PartitionOracle& po);

IterationStats mog_iteration(Pef& pef, int i, const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po);

struct LeafProfile {
  std::vector<Vertex> m;  // ascending
  CoordSet iset;
  bool shortfall = false;  // too few leaves or too small a common support
};

// Greedy: drop leaves until the joint support (without coordinate 1) reaches
// iset_size, always removing the leaf whose loss grows it most.
LeafProfile extract_profile(std::span<const Vertex> leaves, int iset_size, double leaf_target);
// Tree vertices of the segment's tree in target_layer within Q_0.
LeafProfile leaf_profile(const Pef& pef, int tree, int target_layer, const ParameterSet& ps);

struct LeafEntry {
  LeafProfile profile;
  CoordSet jset;
  std::vector<Vertex> witnesses;  // ascending
};

// Keyed by tree id.
struct LeafBook {
  int layer = 0;
  std::unordered_map<int, LeafEntry> entries;
};

struct MogResult {
  Pef pef;
  std::vector<IterationStats> iterations;
  LeafBook book;
};

using MogObserver = std::function<void(const Pef&, const IterationStats&)>;

MogResult run_mog(const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po, int down_to,
                  const MogObserver& observer = {});

struct Allocation {
  std::vector<CoordSet> jsets;
  bool ok = true;
  int blocked = -1;   // first segment that could not be served
  int blocker = -1;   // earlier segment sharing the most of its coordinates
};

using WitnessScore = std::function<std::size_t(std::size_t segment, const CoordSet& j)>;

// Pairwise-disjoint J_k of size ws from I_k minus earlier picks; among the
// candidates the best-scoring one wins, ties go to the lexicographically first.
Allocation allocate_supports(std::span<const CoordSet> isets, int ws, const WitnessScore& score = {});

struct WitnessSet {
  int tree = -1;
  CoordSet jset;
  std::vector<Vertex> witnesses;
};

struct WitnessSelection {
  std::vector<WitnessSet> sets;
  CoordSet jset;  // union over segments
  Allocation allocation;
};

// Witnesses for the given trees, in order; I_S comes from the book.
WitnessSelection select_witnesses(const LeafBook& book, const Pef& pef, std::span<const int> trees,
                                  const ParameterSet& ps);

// Vertices reachable from the tree by monotone decreasing open edges through
// retained Q_0 vertices with layer in [lo, hi], never entering the blocked set.
std::vector<Vertex> agp_grow(std::span<const Vertex> tree, std::span<const Vertex> blocked, int lo, int hi,
                             const EdgePredicate& open, const VertexOracle& retained);

struct AgpPair {
  std::vector<Vertex> first;
  std::vector<Vertex> second;
};

AgpPair agp_grow(std::span<const Vertex> t1, std::span<const Vertex> t2, std::span<const Vertex> blocked, int lo,
                 int hi, const EdgePredicate& open, const VertexOracle& retained);

}  // namespace hcube
