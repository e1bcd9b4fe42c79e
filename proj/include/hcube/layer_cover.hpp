#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/params.hpp"
#include "hcube/percolation.hpp"

namespace hcube {

// Percolated bipartite graph between layers i and i+1 on a chosen vertex set.
struct LayerGraph {
  int layer = 0;
  std::vector<Vertex> vertices;       // ascending
  std::vector<std::vector<int>> adj;  // ascending indices, open edges only

  int index_of(Vertex v) const;
  std::size_t edge_count() const;
};

LayerGraph build_layer_graph(int i, std::vector<Vertex> vertices, EdgeOracle& eo, Stage stage);
LayerGraph build_layer_graph(int i, std::vector<Vertex> vertices, const EdgePredicate& open);

struct Matchings {
  std::vector<std::pair<int, int>> first;
  std::vector<std::pair<int, int>> second;
  int colors = 0;
  std::size_t removed = 0;  // vertices above the degree cap
};

// Proper edge colouring with max-degree colours; the two largest classes.
Matchings two_matchings(const LayerGraph& h, double cap);

struct Component {
  std::vector<int> seq;
  bool cycle = false;
};

// Paths first (from their lower endpoint), then cycles (from their lowest vertex).
std::vector<Component> decompose(const LayerGraph& h, const Matchings& m);

// Consecutive blocks of lo edges; the remainder joins the last block.
std::vector<std::vector<Vertex>> cut_sequence(std::span<const Vertex> seq, int lo);

struct CoverFamily {
  std::vector<std::vector<Vertex>> paths;
  std::size_t covered = 0;
  std::size_t denominator = 0;

  double coverage() const {
    return denominator == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(denominator);
  }
};

struct CoverResult {
  CoverFamily family;
  Matchings matchings;
  std::vector<std::vector<Vertex>> cycles;  // cycle components of M1 + M2 before cutting
  std::size_t dropped = 0;                  // components below the length floor
};

CoverResult cover_layer_graph(const LayerGraph& h, double cap, int lo, std::size_t denominator);

struct LayerCover {
  SpreadReport spread;
  LayerGraph graph;
  CoverResult cover;
};

LayerCover short_path_cover(int i, const ParameterSet& ps, EdgeOracle& eo, const PartitionOracle& po);

std::uint64_t short_cycle_census(int i, int maxlen, int d, const EdgePredicate& open);
std::uint64_t short_cycle_census(int i, int maxlen, const EdgeOracle& eo);

}  // namespace hcube
