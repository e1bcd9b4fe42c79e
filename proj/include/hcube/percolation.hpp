#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "hcube/cube.hpp"

namespace hcube {

struct ParameterSet;

// Randomness streams. Each consumer owns one tag so draws never collide.
enum class Stream : std::uint64_t {
  edge = 1,
  partition = 2,
  vertex = 3,
  merge_pick = 4,
  grow_coin = 5,
  monte_carlo = 6,
  baseline = 7,
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t prf(std::uint64_t seed, Stream tag, std::uint64_t a, std::uint64_t b = 0);
// Uniform in [0, 1) with 53 random bits.
double unit(std::uint64_t h);

// Canonical edge id: lower endpoint plus flipped coordinate.
struct EdgeKey {
  std::uint64_t low = 0;
  int coord = 0;
};

EdgeKey edge_key(Vertex u, Vertex v);

enum class Exposure : std::uint8_t { unqueried = 0, open = 1, closed = 2 };

// Which pipeline stage first exposed an edge.
enum class Stage : std::uint8_t {
  none = 0,
  cover = 1,
  aux = 2,
  grow = 3,
  connector = 4,
  subcube = 5,
  other = 6,
};

using EdgePredicate = std::function<bool(Vertex, Vertex)>;

// Q^d_p. The state of an edge is a pure function of (seed, canonical id); the
// ledger only records which edges have been looked at and by whom.
class EdgeOracle {
 public:
  EdgeOracle(std::uint64_t seed, int d, double p, bool track = true);

  int dim() const { return d_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }

  // Pure lookup; leaves the ledger untouched.
  bool is_open(Vertex u, Vertex v) const;
  // Lookup that records the exposure.
  bool query(Vertex u, Vertex v, Stage stage = Stage::other);
  Exposure exposure(Vertex u, Vertex v) const;
  Stage first_stage(Vertex u, Vertex v) const;
  std::size_t exposed_count() const;
  EdgePredicate predicate() const;

 private:
  bool sample(const EdgeKey& k) const;
  std::uint8_t load(const EdgeKey& k) const;
  std::uint64_t dense_index(const EdgeKey& k) const;

  std::uint64_t seed_;
  int d_;
  double p_;
  bool track_;
  std::unique_ptr<std::atomic<std::uint8_t>[]> dense_;
  mutable std::mutex sparse_mu_;
  std::unordered_map<std::uint64_t, std::uint8_t> sparse_;
  std::atomic<std::size_t> exposed_{0};
};

// Vertex retention for Q^d_p(q).
class VertexOracle {
 public:
  VertexOracle(std::uint64_t seed, double q) : seed_(seed), q_(q) {}
  bool retained(Vertex v) const { return unit(prf(seed_, Stream::vertex, v.bits)) < q_; }
  double q() const { return q_; }

 private:
  std::uint64_t seed_;
  double q_;
};

enum class VClass : std::uint8_t { v1 = 0, v2 = 1, v3 = 2 };

class PartitionOracle {
 public:
  PartitionOracle(std::uint64_t seed, double q1, double q2, double q3);
  VClass class_of(Vertex v) const;
  double weight(VClass c) const { return q_[static_cast<std::size_t>(c)]; }

 private:
  std::uint64_t seed_;
  std::array<double, 3> q_;
};

struct SpreadReport {
  int layer = 0;
  // counts[j][k]: vertices of layer (layer + j) in class k.
  std::array<std::array<std::size_t, 3>, 2> counts{};
  std::array<std::size_t, 2> layer_size{};
  std::vector<Vertex> bad;  // sorted
  bool sizes_ok = false;
  bool bad_ok = false;

  bool well_spread() const { return sizes_ok && bad_ok; }
  bool is_bad(Vertex v) const;
  std::string serialize() const;
};

// Class sizes and cross-layer class degrees for the pair (i, i+1).
SpreadReport well_spread_report(const PartitionOracle& po, int i, const ParameterSet& ps);

}  // namespace hcube
