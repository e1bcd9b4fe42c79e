#pragma once

#include <bit>
#include <bitset>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hcube {

// Widest cube a Vertex can address.
inline constexpr int kMaxDim = 63;
// Largest coordinate a CoordSet can hold.
inline constexpr int kMaxCoord = 255;
// Exhaustive routines refuse to run above this dimension.
inline constexpr int kEnumLimit = 24;

// Coordinate j (1-indexed) lives in bit j-1. Coordinate 1 separates Q_0 from Q_1.
struct Vertex {
  std::uint64_t bits = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

constexpr std::uint64_t coord_bit(int j) { return std::uint64_t{1} << (j - 1); }
constexpr int layer_of(Vertex v) { return std::popcount(v.bits); }
constexpr bool has_coord(Vertex v, int j) { return (v.bits & coord_bit(j)) != 0; }
constexpr Vertex flip(Vertex v, int j) { return Vertex{v.bits ^ coord_bit(j)}; }
constexpr bool in_q0(Vertex v) { return !has_coord(v, 1); }
constexpr std::uint64_t full_mask(int d) {
  return d >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << d) - 1;
}
constexpr bool adjacent(Vertex u, Vertex v) { return std::popcount(u.bits ^ v.bits) == 1; }
constexpr int hamming(Vertex u, Vertex v) { return std::popcount(u.bits ^ v.bits); }

Vertex from_coords(std::initializer_list<int> coords);
Vertex from_coords(std::span<const int> coords);
// Binary string, most significant coordinate first: coordinate 1 is the last character.
std::string to_binary(Vertex v, int d);
Vertex parse_binary(const std::string& s);
void check_dim(int d);
void check_vertex(Vertex v, int d);

class CoordSet {
 public:
  CoordSet() = default;
  CoordSet(std::initializer_list<int> coords);
  static CoordSet range(int lo, int hi);
  static CoordSet of_mask(std::uint64_t mask);

  void insert(int j);
  void erase(int j);
  bool contains(int j) const { return j >= 1 && j <= kMaxCoord && bits_.test(j); }
  int size() const { return static_cast<int>(bits_.count()); }
  bool empty() const { return bits_.none(); }
  bool subset_of(const CoordSet& o) const { return (bits_ & ~o.bits_).none(); }
  int max() const;
  std::vector<int> to_vector() const;
  // Throws unless every coordinate fits in a Vertex.
  std::uint64_t mask() const;

  CoordSet operator|(const CoordSet& o) const { return CoordSet(bits_ | o.bits_); }
  CoordSet operator&(const CoordSet& o) const { return CoordSet(bits_ & o.bits_); }
  CoordSet operator-(const CoordSet& o) const { return CoordSet(bits_ & ~o.bits_); }
  bool operator==(const CoordSet& o) const { return bits_ == o.bits_; }

 private:
  explicit CoordSet(std::bitset<kMaxCoord + 1> b) : bits_(b) {}
  std::bitset<kMaxCoord + 1> bits_;
};

std::string to_string(const CoordSet& s);

CoordSet support(Vertex v);
CoordSet joint_support(std::span<const Vertex> vs);
CoordSet total_support(std::span<const Vertex> vs);

// Q[bottom; top] inside Q^d.
struct SubcubeSpec {
  Vertex bottom;
  Vertex top;
  int d = 0;

  int dimension() const { return layer_of(top) - layer_of(bottom); }
  bool contains(Vertex v) const {
    return (bottom.bits & ~v.bits) == 0 && (v.bits & ~top.bits) == 0;
  }
  void check() const;
  std::vector<Vertex> vertices() const;
};

std::vector<Vertex> neighbors(Vertex v, int d);
std::vector<Vertex> layer_vertices(int d, int i);
std::uint64_t binomial(int n, int k);

// prod_{j<i} (x-j)/(i-j)
double gbinom(double x, int i);
// Unique x >= i-1 with gbinom(x, i) = size; hi must bracket the root.
double solve_binom_x(double size, int i, double hi);
double kk_shadow_bound(std::uint64_t size, int i, int d);
std::vector<Vertex> lower_shadow(std::span<const Vertex> family, int i, int d);
bool binom_ratio_check(double x, int i, int alpha);

bool subcubes_disjoint(const SubcubeSpec& a, const SubcubeSpec& b);
bool subcubes_intersect_exact(const SubcubeSpec& a, const SubcubeSpec& b);

Vertex bridge_vertex(Vertex z, Vertex s, const CoordSet& index_set);

struct BridgeTable {
  std::vector<Vertex> tops;     // S
  std::vector<Vertex> bottoms;  // Z
  std::vector<Vertex> entries;  // row z, column s
  int layer = 0;                // common layer of every entry

  Vertex at(std::size_t zi, std::size_t si) const { return entries[zi * tops.size() + si]; }
};

BridgeTable bridge_family(std::span<const Vertex> tops, std::span<const Vertex> bottoms,
                          const CoordSet& index_set, int d);

// Disjoint subcubes Q[{1,k}; [d] \ (K \ {k})] for k in K.
// With exact_size, |K| must be 2d/3 and d divisible by 3.
std::vector<SubcubeSpec> stitch_cubes(const CoordSet& k_set, int d, bool exact_size = true);

}  // namespace hcube
