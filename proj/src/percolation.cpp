#include "hcube/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hcube/errors.hpp"
#include "hcube/params.hpp"

namespace hcube {

namespace {

constexpr int kDenseLedgerLimit = 22;

std::uint8_t encode(bool open, Stage stage) {
  const auto state = open ? Exposure::open : Exposure::closed;
  return static_cast<std::uint8_t>(static_cast<std::uint8_t>(state) |
                                   (static_cast<std::uint8_t>(stage) << 2));
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t prf(std::uint64_t seed, Stream tag, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(tag) * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ a);
  return mix64(h ^ (b * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

EdgeKey edge_key(Vertex u, Vertex v) {
  const std::uint64_t x = u.bits ^ v.bits;
  if (std::popcount(x) != 1) throw PreconditionError("vertices are not adjacent");
  return EdgeKey{std::min(u.bits, v.bits), std::countr_zero(x) + 1};
}

EdgeOracle::EdgeOracle(std::uint64_t seed, int d, double p, bool track)
    : seed_(seed), d_(d), p_(p), track_(track) {
  check_dim(d);
  require(p >= 0.0 && p <= 1.0, "edge probability outside [0,1]");
  if (track_ && d_ <= kDenseLedgerLimit) {
    const std::size_t n = static_cast<std::size_t>(d_) << (d_ - 1);
    dense_ = std::make_unique<std::atomic<std::uint8_t>[]>(n);
    for (std::size_t k = 0; k < n; ++k) dense_[k].store(0, std::memory_order_relaxed);
  }
}

bool EdgeOracle::sample(const EdgeKey& k) const {
  return unit(prf(seed_, Stream::edge, k.low, static_cast<std::uint64_t>(k.coord))) < p_;
}

std::uint64_t EdgeOracle::dense_index(const EdgeKey& k) const {
  const int c = k.coord - 1;
  const std::uint64_t below = k.low & ((std::uint64_t{1} << c) - 1);
  const std::uint64_t above = (k.low >> (c + 1)) << c;
  return (static_cast<std::uint64_t>(c) << (d_ - 1)) | above | below;
}

bool EdgeOracle::is_open(Vertex u, Vertex v) const {
  check_vertex(u, d_);
  check_vertex(v, d_);
  return sample(edge_key(u, v));
}

bool EdgeOracle::query(Vertex u, Vertex v, Stage stage) {
  check_vertex(u, d_);
  check_vertex(v, d_);
  const EdgeKey k = edge_key(u, v);
  const bool open = sample(k);
  if (!track_) return open;
  const std::uint8_t enc = encode(open, stage);
  const auto state = static_cast<std::uint8_t>(open ? Exposure::open : Exposure::closed);
  if (dense_) {
    std::uint8_t expected = 0;
    if (dense_[dense_index(k)].compare_exchange_strong(expected, enc)) {
      exposed_.fetch_add(1, std::memory_order_relaxed);
    } else if ((expected & 3) != state) {
      throw InvariantError("exposed edge changed state");
    }
    return open;
  }
  const std::uint64_t key = k.low * 64 + static_cast<std::uint64_t>(k.coord);
  std::lock_guard lock(sparse_mu_);
  auto [it, inserted] = sparse_.try_emplace(key, enc);
  if (inserted) {
    exposed_.fetch_add(1, std::memory_order_relaxed);
  } else if ((it->second & 3) != state) {
    throw InvariantError("exposed edge changed state");
  }
  return open;
}

std::uint8_t EdgeOracle::load(const EdgeKey& k) const {
  if (!track_) return 0;
  if (dense_) return dense_[dense_index(k)].load();
  const std::uint64_t key = k.low * 64 + static_cast<std::uint64_t>(k.coord);
  std::lock_guard lock(sparse_mu_);
  const auto it = sparse_.find(key);
  return it == sparse_.end() ? 0 : it->second;
}

Exposure EdgeOracle::exposure(Vertex u, Vertex v) const {
  return static_cast<Exposure>(load(edge_key(u, v)) & 3);
}

Stage EdgeOracle::first_stage(Vertex u, Vertex v) const {
  return static_cast<Stage>(load(edge_key(u, v)) >> 2);
}

std::size_t EdgeOracle::exposed_count() const { return exposed_.load(); }

EdgePredicate EdgeOracle::predicate() const {
  return [this](Vertex u, Vertex v) { return is_open(u, v); };
}

PartitionOracle::PartitionOracle(std::uint64_t seed, double q1, double q2, double q3)
    : seed_(seed), q_{q1, q2, q3} {
  for (double q : q_) require(q >= 0.0 && q <= 1.0, "class probability outside [0,1]");
  require(std::abs(q1 + q2 + q3 - 1.0) <= 1e-9, "class probabilities must sum to 1");
}

VClass PartitionOracle::class_of(Vertex v) const {
  const double u = unit(prf(seed_, Stream::partition, v.bits));
  if (u < q_[0]) return VClass::v1;
  if (u < q_[0] + q_[1] || q_[2] == 0.0) return VClass::v2;
  return VClass::v3;
}

bool SpreadReport::is_bad(Vertex v) const { return std::binary_search(bad.begin(), bad.end(), v); }

std::string SpreadReport::serialize() const {
  std::ostringstream os;
  os << "layer=" << layer;
  for (int j = 0; j < 2; ++j) {
    os << " L" << (layer + j) << "=" << layer_size[static_cast<std::size_t>(j)] << ":";
    for (int k = 0; k < 3; ++k) {
      os << (k ? "," : "") << counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    }
  }
  os << " bad=" << bad.size() << " sizes_ok=" << sizes_ok << " bad_ok=" << bad_ok << " [";
  for (std::size_t k = 0; k < bad.size(); ++k) os << (k ? " " : "") << bad[k].bits;
  os << "]";
  return os.str();
}

SpreadReport well_spread_report(const PartitionOracle& po, int i, const ParameterSet& ps) {
  const int d = ps.d;
  require(i % 2 == 0, "layer pair must start at an even layer");
  require(i >= 0 && i + 1 <= d, "layer pair outside the cube");
  SpreadReport r;
  r.layer = i;
  std::array<std::size_t, 2> bad_per_layer{};
  for (int j = 0; j < 2; ++j) {
    const int layer = i + j;
    const bool up = j == 0;
    const int cross = up ? d - layer : layer;
    const auto verts = layer_vertices(d, layer);
    r.layer_size[static_cast<std::size_t>(j)] = verts.size();
    for (Vertex v : verts) {
      r.counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(po.class_of(v))]++;
      std::array<int, 3> deg{};
      for (int c = 1; c <= d; ++c) {
        if (has_coord(v, c) == up) continue;
        deg[static_cast<std::size_t>(po.class_of(flip(v, c)))]++;
      }
      bool bad = false;
      for (int k = 0; k < 3; ++k) {
        const double mean = po.weight(static_cast<VClass>(k)) * cross;
        if (std::abs(deg[static_cast<std::size_t>(k)] - mean) > ps.spread_slack * mean + 1e-12) bad = true;
      }
      if (bad) {
        r.bad.push_back(v);
        bad_per_layer[static_cast<std::size_t>(j)]++;
      }
    }
  }
  std::sort(r.bad.begin(), r.bad.end());
  r.sizes_ok = true;
  r.bad_ok = true;
  for (std::size_t j = 0; j < 2; ++j) {
    const double n = static_cast<double>(r.layer_size[j]);
    for (std::size_t k = 0; k < 3; ++k) {
      const double want = po.weight(static_cast<VClass>(k)) * n;
      if (std::abs(static_cast<double>(r.counts[j][k]) - want) > ps.spread_slack * want + 1e-12) {
        r.sizes_ok = false;
      }
    }
    if (static_cast<double>(bad_per_layer[j]) > ps.bad_cap_fraction * n) r.bad_ok = false;
  }
  return r;
}

}  // namespace hcube
