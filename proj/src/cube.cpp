#include "hcube/cube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hcube/errors.hpp"

namespace hcube {

Vertex from_coords(std::initializer_list<int> coords) {
  return from_coords(std::span<const int>(coords.begin(), coords.size()));
}

Vertex from_coords(std::span<const int> coords) {
  Vertex v;
  for (int j : coords) {
    require(j >= 1 && j <= kMaxDim, "coordinate out of range");
    v.bits |= coord_bit(j);
  }
  return v;
}

std::string to_binary(Vertex v, int d) {
  std::string s(static_cast<std::size_t>(d), '0');
  for (int j = 1; j <= d; ++j) {
    if (has_coord(v, j)) s[static_cast<std::size_t>(d - j)] = '1';
  }
  return s;
}

Vertex parse_binary(const std::string& s) {
  require(!s.empty() && s.size() <= static_cast<std::size_t>(kMaxDim), "bad vertex string length");
  Vertex v;
  const int d = static_cast<int>(s.size());
  for (int k = 0; k < d; ++k) {
    const char c = s[static_cast<std::size_t>(k)];
    require(c == '0' || c == '1', "vertex string must be binary");
    if (c == '1') v.bits |= coord_bit(d - k);
  }
  return v;
}

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw PreconditionError("dimension exceeds word width");
}

void check_vertex(Vertex v, int d) {
  check_dim(d);
  if ((v.bits & ~full_mask(d)) != 0) throw PreconditionError("vertex has bits above dimension");
}

CoordSet::CoordSet(std::initializer_list<int> coords) {
  for (int j : coords) insert(j);
}

CoordSet CoordSet::range(int lo, int hi) {
  CoordSet s;
  for (int j = lo; j <= hi; ++j) s.insert(j);
  return s;
}

CoordSet CoordSet::of_mask(std::uint64_t mask) {
  CoordSet s;
  while (mask != 0) {
    s.insert(std::countr_zero(mask) + 1);
    mask &= mask - 1;
  }
  return s;
}

void CoordSet::insert(int j) {
  require(j >= 1 && j <= kMaxCoord, "coordinate out of range");
  bits_.set(static_cast<std::size_t>(j));
}

void CoordSet::erase(int j) {
  if (j >= 1 && j <= kMaxCoord) bits_.reset(static_cast<std::size_t>(j));
}

int CoordSet::max() const {
  for (int j = kMaxCoord; j >= 1; --j) {
    if (bits_.test(static_cast<std::size_t>(j))) return j;
  }
  return 0;
}

std::vector<int> CoordSet::to_vector() const {
  std::vector<int> out;
  for (int j = 1; j <= kMaxCoord; ++j) {
    if (bits_.test(static_cast<std::size_t>(j))) out.push_back(j);
  }
  return out;
}

std::uint64_t CoordSet::mask() const {
  require(max() <= kMaxDim, "coordinate set does not fit a vertex word");
  std::uint64_t m = 0;
  for (int j : to_vector()) m |= coord_bit(j);
  return m;
}

std::string to_string(const CoordSet& s) {
  std::string out = "{";
  bool first = true;
  for (int j : s.to_vector()) {
    if (!first) out += ",";
    out += std::to_string(j);
    first = false;
  }
  return out + "}";
}

CoordSet support(Vertex v) { return CoordSet::of_mask(v.bits); }

CoordSet joint_support(std::span<const Vertex> vs) {
  if (vs.empty()) return {};
  std::uint64_t m = ~std::uint64_t{0};
  for (Vertex v : vs) m &= v.bits;
  return CoordSet::of_mask(m);
}

CoordSet total_support(std::span<const Vertex> vs) {
  std::uint64_t m = 0;
  for (Vertex v : vs) m |= v.bits;
  return CoordSet::of_mask(m);
}

void SubcubeSpec::check() const {
  check_vertex(bottom, d);
  check_vertex(top, d);
  require((bottom.bits & ~top.bits) == 0, "subcube bottom not below top");
}

std::vector<Vertex> SubcubeSpec::vertices() const {
  require(dimension() <= kEnumLimit, "subcube too large to enumerate");
  const std::uint64_t free = top.bits & ~bottom.bits;
  std::vector<Vertex> out;
  out.reserve(std::size_t{1} << dimension());
  // Enumerate subsets of the free mask in increasing order.
  std::uint64_t sub = 0;
  do {
    out.push_back(Vertex{bottom.bits | sub});
    sub = (sub - free) & free;
  } while (sub != 0);
  return out;
}

std::vector<Vertex> neighbors(Vertex v, int d) {
  check_vertex(v, d);
  std::vector<Vertex> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int j = 1; j <= d; ++j) out.push_back(flip(v, j));
  return out;
}

std::vector<Vertex> layer_vertices(int d, int i) {
  check_dim(d);
  require(d <= kEnumLimit, "layer enumeration above enumeration limit");
  std::vector<Vertex> out;
  if (i < 0 || i > d) return out;
  out.reserve(binomial(d, i));
  if (i == 0) {
    out.push_back(Vertex{0});
    return out;
  }
  // Gosper's hack walks same-popcount words in increasing order.
  std::uint64_t x = (std::uint64_t{1} << i) - 1;
  const std::uint64_t limit = std::uint64_t{1} << d;
  while (x < limit) {
    out.push_back(Vertex{x});
    const std::uint64_t c = x & (~x + 1);
    const std::uint64_t r = x + c;
    x = (((r ^ x) >> 2) / c) | r;
  }
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __extension__ using wide = unsigned __int128;  // C(63, 31) * 32 overflows 64 bits
  wide r = 1;
  for (int j = 1; j <= k; ++j) r = r * static_cast<unsigned>(n - k + j) / static_cast<unsigned>(j);
  return static_cast<std::uint64_t>(r);
}

double gbinom(double x, int i) {
  double r = 1.0;
  for (int j = 0; j < i; ++j) r *= (x - j) / static_cast<double>(i - j);
  return r;
}

double solve_binom_x(double size, int i, double hi) {
  require(i >= 1, "binomial index must be positive");
  require(size > 0, "binomial target must be positive");
  double lo = i - 1.0;
  hi = std::max(hi, lo + 1.0);
  while (gbinom(hi, i) < size) hi = lo + 2.0 * (hi - lo);
  // Keep gbinom(lo) <= size so callers never overstate a bound.
  for (int it = 0; it < 400 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gbinom(mid, i) <= size) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  ensure(std::abs(gbinom(lo, i) - size) <= 1e-6 * size, "binomial solver missed tolerance");
  return lo;
}

double kk_shadow_bound(std::uint64_t size, int i, int d) {
  check_dim(d);
  require(i >= 1 && i <= d, "layer index out of range");
  require(size >= 1 && size <= binomial(d, i), "family size out of range");
  const double x = solve_binom_x(static_cast<double>(size), i, d);
  return gbinom(x, i - 1);
}

std::vector<Vertex> lower_shadow(std::span<const Vertex> family, int i, int d) {
  check_dim(d);
  require(d <= kEnumLimit, "shadow enumeration above enumeration limit");
  std::vector<Vertex> out;
  for (Vertex a : family) {
    check_vertex(a, d);
    require(layer_of(a) == i, "mixed-layer family");
    std::uint64_t m = a.bits;
    while (m != 0) {
      const std::uint64_t low = m & (~m + 1);
      out.push_back(Vertex{a.bits ^ low});
      m ^= low;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool binom_ratio_check(double x, int i, int alpha) {
  require(i >= 1 && alpha >= 1, "index and alpha must be positive");
  require(x >= i - 1.0, "x below the monotone domain");
  const double lhs = static_cast<double>(i) / (3.0 * alpha) * gbinom(x, i);
  const double rhs = gbinom(x, i - 1);
  return lhs <= rhs * (1.0 + 1e-12);
}

bool subcubes_disjoint(const SubcubeSpec& a, const SubcubeSpec& b) {
  a.check();
  b.check();
  if (a.d != b.d) throw PreconditionError("subcube dimension mismatch");
  return (a.bottom.bits & ~b.top.bits) != 0 || (b.bottom.bits & ~a.top.bits) != 0;
}

bool subcubes_intersect_exact(const SubcubeSpec& a, const SubcubeSpec& b) {
  a.check();
  b.check();
  if (a.d != b.d) throw PreconditionError("subcube dimension mismatch");
  require(a.d <= 20, "exact subcube check limited to d <= 20");
  const SubcubeSpec& small = a.dimension() <= b.dimension() ? a : b;
  const SubcubeSpec& other = &small == &a ? b : a;
  for (Vertex v : small.vertices()) {
    if (other.contains(v)) return true;
  }
  return false;
}

Vertex bridge_vertex(Vertex z, Vertex s, const CoordSet& index_set) {
  const std::uint64_t im = index_set.mask();
  require((z.bits & ~im) == 0, "support(z) not inside I");
  require((im & ~s.bits) == 0, "I not inside support(s)");
  return Vertex{s.bits & ~(im & ~z.bits)};
}

BridgeTable bridge_family(std::span<const Vertex> tops, std::span<const Vertex> bottoms,
                          const CoordSet& index_set, int d) {
  check_dim(d);
  require(!tops.empty() && !bottoms.empty(), "bridge family needs non-empty S and Z");
  for (Vertex s : tops) check_vertex(s, d);
  for (Vertex z : bottoms) check_vertex(z, d);
  const int top_layer = layer_of(tops.front());
  const int bottom_layer = layer_of(bottoms.front());
  for (Vertex s : tops) require(layer_of(s) == top_layer, "S spans several layers");
  for (Vertex z : bottoms) require(layer_of(z) == bottom_layer, "Z spans several layers");
  require(index_set.subset_of(joint_support(tops)), "I not inside the joint support of S");
  require(total_support(bottoms).subset_of(index_set), "total support of Z not inside I");

  BridgeTable t;
  t.tops.assign(tops.begin(), tops.end());
  t.bottoms.assign(bottoms.begin(), bottoms.end());
  t.layer = bottom_layer + top_layer - index_set.size();
  t.entries.reserve(tops.size() * bottoms.size());
  for (Vertex z : bottoms) {
    for (Vertex s : tops) {
      const Vertex u = bridge_vertex(z, s, index_set);
      ensure(layer_of(u) == t.layer, "bridge vertex off its layer");
      t.entries.push_back(u);
    }
  }

  for (std::size_t zi = 0; zi < bottoms.size(); ++zi) {
    for (std::size_t a = 0; a < tops.size(); ++a) {
      for (std::size_t b = a + 1; b < tops.size(); ++b) {
        const SubcubeSpec x{t.at(zi, a), tops[a], d};
        const SubcubeSpec y{t.at(zi, b), tops[b], d};
        ensure(subcubes_disjoint(x, y), "upper bridge subcubes overlap");
      }
    }
  }
  for (std::size_t za = 0; za < bottoms.size(); ++za) {
    for (std::size_t zb = za + 1; zb < bottoms.size(); ++zb) {
      for (std::size_t sa = 0; sa < tops.size(); ++sa) {
        for (std::size_t sb = 0; sb < tops.size(); ++sb) {
          const SubcubeSpec x{bottoms[za], t.at(za, sa), d};
          const SubcubeSpec y{bottoms[zb], t.at(zb, sb), d};
          ensure(subcubes_disjoint(x, y), "lower bridge subcubes overlap");
        }
      }
    }
  }
  return t;
}

std::vector<SubcubeSpec> stitch_cubes(const CoordSet& k_set, int d, bool exact_size) {
  check_dim(d);
  require(!k_set.contains(1), "K must not contain coordinate 1");
  require(k_set.max() <= d, "K exceeds the dimension");
  if (exact_size) {
    require(d % 3 == 0, "exact stitching needs d divisible by 3");
    require(k_set.size() == 2 * d / 3, "K must have size 2d/3");
  }
  const std::uint64_t km = k_set.mask();
  std::vector<SubcubeSpec> out;
  for (int k : k_set.to_vector()) {
    const Vertex u{coord_bit(1) | coord_bit(k)};
    const Vertex v{full_mask(d) & ~(km & ~coord_bit(k))};
    out.push_back(SubcubeSpec{u, v, d});
  }
  const int dim = d - k_set.size() - 1;
  for (std::size_t a = 0; a < out.size(); ++a) {
    ensure(out[a].dimension() == dim, "stitching subcube has wrong dimension");
    ensure(has_coord(out[a].bottom, 1), "stitching subcube outside Q_1");
    ensure(layer_of(out[a].bottom) >= 1 && layer_of(out[a].top) <= d - k_set.size() + 1,
           "stitching subcube outside its layer band");
    for (std::size_t b = a + 1; b < out.size(); ++b) {
      ensure(subcubes_disjoint(out[a], out[b]), "stitching subcubes overlap");
    }
  }
  return out;
}

}  // namespace hcube
