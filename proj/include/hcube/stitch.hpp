#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/mog.hpp"
#include "hcube/percolation.hpp"

namespace hcube {

// u -> u + {1} -> u + {1, k}; u lies in Q_0 and misses k.
struct Connector {
  int k = 0;
  Vertex u;
  Vertex mid;
  Vertex end;
};

Connector make_connector(int k, Vertex u);

// One path to be stitched with its witness leaves: w_plus on the head tree,
// w_minus on the tail tree.
struct StitchPath {
  int path = -1;
  std::vector<Vertex> w_plus;
  std::vector<Vertex> w_minus;
};

// Link r runs from W-(P_r) to W+(P_{r+1}) through one subcube of class r.
struct ConnectorPlan {
  int d = 0;
  CoordSet jset;
  CoordSet kset;
  std::vector<StitchPath> parts;
  std::vector<CoordSet> classes;
  std::vector<Connector> connectors;

  // Q[{1,k}; [d] \ (K \ {k})].
  SubcubeSpec cube_for(int k) const;
};

// K is the k_size smallest coordinates of [2, d] outside J (0 takes them all),
// split into parts.size() consecutive classes of balanced size.
ConnectorPlan plan_connectors(std::span<const StitchPath> parts, const CoordSet& jset, int d, int k_size);

// Vertices a search must not enter.
using VertexFilter = std::function<bool(Vertex)>;

// Shortest open path from a to b inside the subcube, exposing edges as the
// search reaches them. Every edge touched must be fresh or owned by this stage.
std::optional<std::vector<Vertex>> subcube_connect(const SubcubeSpec& spec, Vertex a, Vertex b, EdgeOracle& eo,
                                                   const VertexFilter& blocked = {});

struct Link {
  int k = 0;
  Vertex u_minus;
  Vertex u_plus;
  std::vector<Vertex> inner;  // y- .. y+ inside the subcube
};

// First working (k, u-, u+) in increasing order; none if class r has no link.
std::optional<Link> find_link(const ConnectorPlan& plan, std::size_t r, EdgeOracle& eo,
                              const VertexFilter& blocked = {});

// Closed walk listed once: first vertex not repeated at the end.
std::vector<Vertex> assemble_cycle(const Pef& pef, const ConnectorPlan& plan, std::span<const std::optional<Link>> links,
                                   const EdgeOracle& eo);

}  // namespace hcube
