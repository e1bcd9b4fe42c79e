#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/layer_cover.hpp"
#include "hcube/params.hpp"
#include "hcube/percolation.hpp"

namespace hcube {

// One Aux edge and the cube edge that witnesses it.
struct AuxEdge {
  int a = 0;         // segment vertex id
  int b = 0;         // aux id of the layer-i vertex
  Vertex on_segment;  // smallest segment vertex adjacent to the target
  Vertex target;
};

// Aux ids: segment 2k is the head of path k, 2k+1 its tail; the layer vertices follow.
struct AuxGraph {
  int layer = 0;
  int segment_len = 0;
  std::vector<std::vector<Vertex>> paths;
  std::vector<Vertex> targets;  // ascending
  std::vector<AuxEdge> edges;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbour, edge id), neighbour ascending

  int a_count() const { return static_cast<int>(2 * paths.size()); }
  int size() const { return static_cast<int>(adj.size()); }
  bool is_a(int x) const { return x < a_count(); }
  static int partner(int a) { return a ^ 1; }
  bool is_head(int a) const { return (a & 1) == 0; }
  // Segment vertices in path order.
  std::span<const Vertex> segment(int a) const;
};

AuxGraph build_aux(const CoverFamily& p1, int i, int segment_len, std::span<const Vertex> targets);
// Abstract Aux graph without geometry; witnesses are left empty.
AuxGraph make_aux(int path_count, int target_count, std::span<const std::pair<int, int>> edges);

enum class Place : std::uint8_t { z, u1, u2, u, w };
enum class Mark : std::uint8_t { unqueried, open, closed, skipped };
enum class Action : std::uint8_t { follow, retire, seed, query, skip };
enum class PhaseEnd : std::uint8_t { vertex_cap, query_cap, exhausted };

struct DfsLimits {
  double vertex_cap = 0;
  double query_cap = 0;
  int deg_floor = 0;
  bool strict = false;
  double long_path_floor = 0;  // aux vertices

  static DfsLimits from(const ParameterSet& ps);
};

struct DfsState {
  const AuxGraph* g = nullptr;
  std::vector<Place> place;
  std::vector<int> stack;
  std::vector<Mark> marks;           // per edge
  std::vector<std::size_t> cursor;   // first adjacency slot not yet settled
  std::size_t seed_cursor = 0;       // A ids below this have left Z
  std::size_t in_u1 = 0;
  double phase_queries = 0;
  double total_queries = 0;
  int phase = 0;

  explicit DfsState(const AuxGraph& graph);
  std::size_t count(Place p) const;
  // First A vertex still in Z, or -1.
  int next_seed();
  // Throws InvariantError on any broken invariant.
  void check_invariants() const;
};

using AuxEdgeSource = std::function<bool(const AuxEdge&)>;
using DfsObserver = std::function<void(const DfsState&, Action)>;

struct PhaseRecord {
  std::vector<int> path;
  double queries = 0;
  std::size_t retired = 0;
  PhaseEnd end = PhaseEnd::exhausted;
  bool long_path = false;
};

struct DfsResult {
  std::vector<PhaseRecord> phases;
  std::size_t retired = 0;
  std::size_t w_in_a = 0;
  std::size_t final_u = 0;

  double w_fraction(int a_count) const {
    return a_count == 0 ? 0.0 : static_cast<double>(w_in_a) / a_count;
  }
};

void cleanup(DfsState& st, int floor);
PhaseRecord run_phase(DfsState& st, const DfsLimits& lim, const AuxEdgeSource& source,
                      const DfsObserver& observer = {});
DfsResult dfs_aux(const AuxGraph& g, const DfsLimits& lim, const AuxEdgeSource& source,
                  const DfsObserver& observer = {});

struct RealizeResult {
  CoverFamily family;
  std::size_t flagged = 0;
  std::size_t bad = 0;
};

// Cube paths for the long, good aux paths; witness edges must be exposed and open.
RealizeResult realize_paths(const AuxGraph& g, const DfsResult& fam, const ParameterSet& ps,
                            const EdgeOracle& eo, std::size_t denominator);

struct MergeOutcome {
  AuxGraph aux;
  DfsResult dfs;
  RealizeResult realized;
};

// Build Aux over the cover paths and the V2 vertices of layer i, then run DFS-Aux.
MergeOutcome merge_layer(const CoverFamily& p1, int i, const ParameterSet& ps, EdgeOracle& eo,
                         const PartitionOracle& po, const DfsObserver& observer = {});

}  // namespace hcube
