#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hcube/cube.hpp"
#include "hcube/errors.hpp"

using namespace hcube;

namespace {

// Independent shadow: scan every vertex of L_{i-1} for a neighbour in the family.
std::size_t brute_shadow_size(const std::set<std::uint64_t>& family, int i, int d) {
  std::size_t n = 0;
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << d); ++w) {
    if (std::popcount(w) != i - 1) continue;
    for (int c = 0; c < d; ++c) {
      if ((w >> c & 1) == 0 && family.contains(w | (std::uint64_t{1} << c))) {
        ++n;
        break;
      }
    }
  }
  return n;
}

// Uniform vertex of the given layer containing must and contained in must | within.
Vertex random_layer_vertex(std::mt19937_64& rng, int d, int layer, std::uint64_t must = 0, std::uint64_t within = ~0ULL) {
  std::vector<int> free;
  for (int c = 1; c <= d; ++c) {
    if (!(must & coord_bit(c)) && (within & coord_bit(c))) free.push_back(c);
  }
  std::shuffle(free.begin(), free.end(), rng);
  std::uint64_t bits = must;
  for (int k = 0; k < layer - std::popcount(must); ++k) bits |= coord_bit(free.at(static_cast<std::size_t>(k)));
  return Vertex{bits};
}

}  // namespace

TEST_CASE("binary strings put coordinate 1 last") {
  CHECK(to_binary(from_coords({1, 3}), 4) == "0101");
  CHECK(parse_binary("0101") == from_coords({1, 3}));
  CHECK(parse_binary(to_binary(Vertex{0b101101}, 6)) == Vertex{0b101101});
  CHECK_THROWS_AS(parse_binary("01x1"), PreconditionError);
  CHECK_THROWS_AS(parse_binary(""), PreconditionError);
  CHECK_THROWS_AS(check_vertex(Vertex{0b10000}, 4), PreconditionError);
  CHECK_THROWS_AS(check_dim(64), PreconditionError);
}

TEST_CASE("support reads out the one-coordinates") {
  CHECK(support(parse_binary("0000")).empty());
  CHECK(support(parse_binary("0101")) == CoordSet{1, 3});
  CHECK(support(parse_binary("1111")) == CoordSet{1, 2, 3, 4});
  for (std::uint64_t b = 0; b < 64; ++b) CHECK(support(Vertex{b}).size() == layer_of(Vertex{b}));
}

TEST_CASE("joint and total support") {
  const std::vector<Vertex> vs{from_coords({1, 2, 5}), from_coords({2, 5, 6}), from_coords({2, 3, 5})};
  CHECK(joint_support(vs) == CoordSet{2, 5});
  CHECK(total_support(vs) == CoordSet{1, 2, 3, 5, 6});
}

TEST_CASE("neighbors are ordered by flipped coordinate") {
  const auto n3 = neighbors(Vertex{0}, 3);
  REQUIRE(n3.size() == 3);
  CHECK(n3[0] == from_coords({1}));
  CHECK(n3[1] == from_coords({2}));
  CHECK(n3[2] == from_coords({3}));
  for (Vertex w : neighbors(parse_binary("11"), 2)) CHECK(layer_of(w) == 1);
  const auto n = neighbors(parse_binary("101"), 3);
  CHECK(std::count_if(n.begin(), n.end(), [](Vertex w) { return layer_of(w) == 3; }) == 1);
  CHECK(std::count_if(n.begin(), n.end(), [](Vertex w) { return layer_of(w) == 1; }) == 2);
}

TEST_CASE("property: every neighbour sits one layer away") {
  const int d = 10;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << d); ++b) {
    const Vertex v{b};
    for (Vertex w : neighbors(v, d)) {
      REQUIRE(hamming(v, w) == 1);
      REQUIRE(std::abs(layer_of(v) - layer_of(w)) == 1);
    }
  }
}

TEST_CASE("layer enumeration matches binomials") {
  for (int d = 1; d <= 12; ++d) {
    std::uint64_t total = 0;
    for (int i = 0; i <= d; ++i) {
      const auto layer = layer_vertices(d, i);
      CHECK(layer.size() == binomial(d, i));
      CHECK(std::is_sorted(layer.begin(), layer.end()));
      total += layer.size();
    }
    CHECK(total == (std::uint64_t{1} << d));
  }
  CHECK(binomial(63, 31) == 916312070471295267ULL);
  CHECK(binomial(5, 7) == 0);
}

TEST_CASE("subcube disjointness, sufficient and exact") {
  const SubcubeSpec a{from_coords({1}), from_coords({1, 2}), 4};
  const SubcubeSpec b{from_coords({3}), from_coords({3, 4}), 4};
  CHECK(subcubes_disjoint(a, b));
  CHECK_FALSE(subcubes_intersect_exact(a, b));

  const SubcubeSpec c{Vertex{0}, from_coords({1, 2}), 4};
  const SubcubeSpec e{Vertex{0}, from_coords({2, 3}), 4};
  CHECK_FALSE(subcubes_disjoint(c, e));
  CHECK(subcubes_intersect_exact(c, e));
  CHECK(c.contains(from_coords({2})));
  CHECK(e.contains(from_coords({2})));

  CHECK_FALSE(subcubes_disjoint(a, a));
  CHECK_THROWS_AS(subcubes_disjoint(a, SubcubeSpec{Vertex{0}, Vertex{1}, 5}), PreconditionError);
}

TEST_CASE("property: sufficient disjointness implies exact disjointness") {
  std::mt19937_64 rng(11);
  const int d = 8;
  for (int t = 0; t < 2000; ++t) {
    auto pick = [&] {
      const std::uint64_t top = rng() & full_mask(d);
      const std::uint64_t bottom = top & rng() & rng();
      return SubcubeSpec{Vertex{bottom}, Vertex{top}, d};
    };
    const SubcubeSpec x = pick();
    const SubcubeSpec y = pick();
    if (subcubes_disjoint(x, y)) REQUIRE_FALSE(subcubes_intersect_exact(x, y));
  }
}

TEST_CASE("kk_shadow_bound on the worked cases") {
  CHECK(kk_shadow_bound(6, 2, 4) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(kk_shadow_bound(1, 3, 8) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(kk_shadow_bound(3, 2, 4) == doctest::Approx(3.0).epsilon(1e-9));
  const std::vector<Vertex> fam{parse_binary("1100"), parse_binary("1010"), parse_binary("0110")};
  const auto sh = lower_shadow(fam, 2, 4);
  CHECK(sh == std::vector<Vertex>{parse_binary("0010"), parse_binary("0100"), parse_binary("1000")});
  CHECK_THROWS_AS(kk_shadow_bound(0, 2, 4), PreconditionError);
  CHECK_THROWS_AS(kk_shadow_bound(7, 2, 4), PreconditionError);
}

TEST_CASE("lower_shadow edge cases") {
  CHECK(lower_shadow({}, 3, 6).empty());
  const auto full = layer_vertices(7, 3);
  CHECK(lower_shadow(full, 3, 7) == layer_vertices(7, 2));
  const std::vector<Vertex> mixed{from_coords({1}), from_coords({1, 2})};
  CHECK_THROWS_AS(lower_shadow(mixed, 2, 4), PreconditionError);
}

TEST_CASE("binomial solver meets its tolerance") {
  for (int i = 1; i <= 8; ++i) {
    for (double size : {1.0, 2.5, 10.0, 77.0, 1000.0}) {
      const double x = solve_binom_x(size, i, 64.0);
      CHECK(x >= i - 1.0);
      CHECK(std::abs(gbinom(x, i) - size) <= 1e-6 * size);
    }
  }
}

TEST_CASE("property: Kruskal-Katona bound against exhaustive shadows") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 600; ++t) {
    const int d = 4 + static_cast<int>(rng() % 7);
    const int i = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(d));
    const auto layer = layer_vertices(d, i);
    const std::size_t size = 1 + rng() % layer.size();
    std::vector<Vertex> pool = layer;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(size);
    std::set<std::uint64_t> fam;
    for (Vertex v : pool) fam.insert(v.bits);
    const std::size_t exact = brute_shadow_size(fam, i, d);
    REQUIRE(lower_shadow(pool, i, d).size() == exact);
    REQUIRE(static_cast<double>(exact) >= kk_shadow_bound(size, i, d) - 1e-9);
  }
}

TEST_CASE("binom_ratio_check inside and outside its regime") {
  for (int i = 1; i <= 40; ++i) {
    for (int alpha = 1; alpha <= 6; ++alpha) CHECK(binom_ratio_check(i, i, alpha));
  }
  CHECK(binom_ratio_check(100 + 3.0 * 2 / 2, 100, 2));
  // Both sides evaluated directly: (10/3) * C(20,10) against C(20,9).
  const bool wide = binom_ratio_check(20.0, 10, 1);
  CHECK(wide == (10.0 / 3.0 * gbinom(20, 10) <= gbinom(20, 9)));
  CHECK_FALSE(wide);
  CHECK_THROWS_AS(binom_ratio_check(1.0, 5, 1), PreconditionError);
}

TEST_CASE("bridge_vertex applies the subtraction formula") {
  const Vertex s = from_coords({1, 2, 3, 4});
  const Vertex z = from_coords({1});
  CHECK(bridge_vertex(Vertex{0}, s, CoordSet{}) == s);
  CHECK(bridge_vertex(z, s, CoordSet{1}) == s);
  CHECK(support(bridge_vertex(z, s, CoordSet{1, 2})) == CoordSet{1, 3, 4});
  CHECK_THROWS_AS(bridge_vertex(from_coords({5}), s, CoordSet{1, 2}), PreconditionError);
  CHECK_THROWS_AS(bridge_vertex(z, s, CoordSet{1, 6}), PreconditionError);
}

TEST_CASE("bridge_family on a single pair and bad input") {
  const Vertex s = from_coords({1, 2, 3, 7});
  const Vertex z = from_coords({2});
  const std::vector<Vertex> tops{s};
  const std::vector<Vertex> bottoms{z};
  const BridgeTable t = bridge_family(tops, bottoms, CoordSet{1, 2, 3}, 8);
  REQUIRE(t.entries.size() == 1);
  CHECK(t.at(0, 0) == bridge_vertex(z, s, CoordSet{1, 2, 3}));
  CHECK(t.layer == 4 + 1 - 3);
  const std::vector<Vertex> outside{from_coords({5})};
  CHECK_THROWS_AS(bridge_family(tops, outside, CoordSet{1, 2, 3}, 8), PreconditionError);
}

TEST_CASE("property: bridge families at d=12 are exhaustively disjoint") {
  std::mt19937_64 rng(5);
  const int d = 12;
  const CoordSet iset{1, 2, 3};
  for (int t = 0; t < 40; ++t) {
    std::set<std::uint64_t> ss, zs;
    while (ss.size() < 6) ss.insert(random_layer_vertex(rng, d, 8, iset.mask()).bits);
    while (zs.size() < 3) zs.insert(random_layer_vertex(rng, d, 2, 0, iset.mask()).bits);
    std::vector<Vertex> tops, bottoms;
    for (auto b : ss) tops.push_back(Vertex{b});
    for (auto b : zs) bottoms.push_back(Vertex{b});
    const BridgeTable tab = bridge_family(tops, bottoms, iset, d);
    for (std::size_t z = 0; z < bottoms.size(); ++z) {
      for (std::size_t a = 0; a < tops.size(); ++a) {
        const Vertex u = tab.at(z, a);
        REQUIRE(support(bottoms[z]).subset_of(support(u)));
        REQUIRE(support(u).subset_of(support(tops[a])));
        REQUIRE(layer_of(u) == 2 + 8 - 3);
        for (std::size_t b = a + 1; b < tops.size(); ++b) {
          const SubcubeSpec x{u, tops[a], d};
          const SubcubeSpec y{tab.at(z, b), tops[b], d};
          REQUIRE_FALSE(subcubes_intersect_exact(x, y));
        }
      }
    }
    for (std::size_t z1 = 0; z1 < bottoms.size(); ++z1) {
      for (std::size_t z2 = z1 + 1; z2 < bottoms.size(); ++z2) {
        for (std::size_t a = 0; a < tops.size(); ++a) {
          for (std::size_t b = 0; b < tops.size(); ++b) {
            const SubcubeSpec x{bottoms[z1], tab.at(z1, a), d};
            const SubcubeSpec y{bottoms[z2], tab.at(z2, b), d};
            REQUIRE_FALSE(subcubes_intersect_exact(x, y));
          }
        }
      }
    }
  }
}

TEST_CASE("stitch_cubes at d=12") {
  const CoordSet k = CoordSet::range(2, 9);
  const auto cubes = stitch_cubes(k, 12);
  REQUIRE(cubes.size() == 8);
  CHECK(support(cubes[0].bottom) == CoordSet{1, 2});
  CHECK(support(cubes[0].top) == CoordSet{1, 2, 10, 11, 12});
  CHECK(cubes[0].dimension() == 12 / 3 - 1);
  int pairs = 0;
  for (std::size_t a = 0; a < cubes.size(); ++a) {
    for (std::size_t b = a + 1; b < cubes.size(); ++b) {
      CHECK_FALSE(subcubes_intersect_exact(cubes[a], cubes[b]));
      ++pairs;
    }
  }
  CHECK(pairs == 28);
  CHECK_THROWS_AS(stitch_cubes(CoordSet::range(1, 8), 12), PreconditionError);
  CHECK_THROWS_AS(stitch_cubes(CoordSet::range(2, 8), 12), PreconditionError);
  CHECK_THROWS_AS(stitch_cubes(CoordSet::range(2, 8), 11), PreconditionError);
}

TEST_CASE("property: stitch cubes stay disjoint and in band for every d up to 15") {
  for (int d = 3; d <= 15; ++d) {
    for (int ks = 1; ks <= d - 1; ++ks) {
      const CoordSet k = CoordSet::range(2, 1 + ks);
      const auto cubes = stitch_cubes(k, d, false);
      for (std::size_t a = 0; a < cubes.size(); ++a) {
        REQUIRE(cubes[a].dimension() == d - ks - 1);
        REQUIRE(layer_of(cubes[a].top) <= d - ks + 1);
        for (std::size_t b = a + 1; b < cubes.size(); ++b) REQUIRE_FALSE(subcubes_intersect_exact(cubes[a], cubes[b]));
      }
    }
  }
}

TEST_CASE("CoordSet algebra") {
  const CoordSet a{1, 3, 5};
  const CoordSet b{3, 4};
  CHECK((a | b) == CoordSet{1, 3, 4, 5});
  CHECK((a & b) == CoordSet{3});
  CHECK((a - b) == CoordSet{1, 5});
  CHECK(a.max() == 5);
  CHECK(CoordSet::of_mask(0b10101).to_vector() == std::vector<int>{1, 3, 5});
  CHECK(CoordSet::range(2, 4).subset_of(CoordSet{1, 2, 3, 4}));
  CHECK_THROWS_AS(CoordSet{100}.mask(), PreconditionError);
}
