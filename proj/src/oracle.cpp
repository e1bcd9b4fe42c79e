#include "hcube/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <unordered_set>
#include <utility>

#include "hcube/errors.hpp"

namespace hcube {

CycleReport validate_cycle(std::span<const Vertex> seq, int d, const EdgePredicate& open) {
  check_dim(d);
  CycleReport r;
  r.length = seq.size();
  auto fail = [&](std::size_t at, const char* why) {
    r.valid = false;
    r.index = at;
    r.reason = why;
    return r;
  };
  if (seq.empty()) return fail(0, "empty");
  if (seq.size() < 4) return fail(0, "too short");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(seq.size());
  for (std::size_t x = 0; x < seq.size(); ++x) {
    const Vertex a = seq[x];
    const Vertex b = seq[(x + 1) % seq.size()];
    if ((a.bits & ~full_mask(d)) != 0) return fail(x, "vertex outside the cube");
    if (!seen.insert(a.bits).second) return fail(x, "not simple");
    if ((b.bits & ~full_mask(d)) != 0) return fail((x + 1) % seq.size(), "vertex outside the cube");
    if (!adjacent(a, b)) return fail(x, "not adjacent");
    if (!open(a, b)) return fail(x, "closed edge");
  }
  r.valid = true;
  return r;
}

CycleReport validate_cycle(std::span<const Vertex> seq, const EdgeOracle& eo) {
  return validate_cycle(seq, eo.dim(), eo.predicate());
}

namespace {

std::vector<std::uint64_t> open_masks(const EdgeOracle& eo) {
  const int d = eo.dim();
  require(d <= kEnumLimit, "dimension too large to enumerate");
  const std::uint64_t n = std::uint64_t{1} << d;
  std::vector<std::uint64_t> adj(n, 0);
  for (std::uint64_t v = 0; v < n; ++v) {
    for (int c = 1; c <= d; ++c) {
      if (v & coord_bit(c)) continue;
      const std::uint64_t w = v | coord_bit(c);
      if (eo.is_open(Vertex{v}, Vertex{w})) {
        adj[v] |= coord_bit(c);
        adj[w] |= coord_bit(c);
      }
    }
  }
  return adj;
}

struct Brute {
  const std::vector<std::uint64_t>& adj;
  std::uint64_t start = 0;
  std::uint64_t allowed = 0;  // vertices above start, as a bitmask over ids
  std::uint64_t visited = 0;
  std::size_t best = 0;

  void dfs(std::uint64_t v, std::size_t len) {
    if (len + static_cast<std::size_t>(std::popcount(allowed & ~visited)) <= best) return;
    std::uint64_t m = adj[v];
    while (m != 0) {
      const std::uint64_t low = m & (~m + 1);
      m ^= low;
      const std::uint64_t w = v ^ low;
      if (w == start) {
        if (len >= 4) best = std::max(best, len);
        continue;
      }
      const std::uint64_t bit = std::uint64_t{1} << w;
      if (!(allowed & bit) || (visited & bit)) continue;
      visited |= bit;
      dfs(w, len + 1);
      visited &= ~bit;
    }
  }
};

}  // namespace

std::size_t brute_longest_cycle(const EdgeOracle& eo) {
  if (eo.dim() > kBruteLimit) throw PreconditionError("d too large for exhaustive search");
  const auto adj = open_masks(eo);
  const std::uint64_t n = adj.size();
  Brute b{adj};
  // The cycle is rooted at its smallest vertex.
  for (std::uint64_t s = 0; s < n && b.best < n - s; ++s) {
    b.start = s;
    b.allowed = (n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1) & ~((std::uint64_t{1} << (s + 1)) - 1);
    b.visited = 0;
    b.dfs(s, 1);
  }
  return b.best;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  require(trials > 0 && successes <= trials, "Wilson interval needs 0 <= successes <= trials > 0");
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (ph + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return Interval{std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

McEstimate mc_monotone_path(int dim, double alpha, double q, std::uint64_t trials, std::uint64_t seed) {
  require(dim >= 1 && dim <= kEnumLimit, "dimension out of range");
  require(trials > 0, "at least one trial is required");
  require(q >= 0 && q <= 1, "retention probability must lie in [0,1]");
  const double rho = alpha / dim;
  if (!(rho >= 0) || rho > 1) throw PreconditionError("rho = alpha / D must lie in [0,1]");
  McEstimate out;
  out.trials = trials;
  out.outside_regime = !(alpha > std::numbers::e) || !(q > std::numbers::e / alpha);

  const std::uint64_t n = std::uint64_t{1} << dim;
  const std::uint64_t top = n - 1;
  constexpr std::uint64_t kVertexTag = std::uint64_t{1} << 62;
  std::vector<std::uint64_t> stamp(n, 0);  // trial + 1 when reached in that trial
  std::vector<std::uint64_t> layer, next;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto keep = [&](std::uint64_t v) { return unit(prf(seed, Stream::monte_carlo, t, kVertexTag | v)) < q; };
    auto open = [&](std::uint64_t low, int c) {
      return unit(prf(seed, Stream::monte_carlo, t, (low << 6) | static_cast<std::uint64_t>(c - 1))) < rho;
    };
    if (!keep(0) || !keep(top)) continue;
    layer.assign(1, 0);
    for (int i = 0; i < dim && !layer.empty(); ++i) {
      next.clear();
      for (std::uint64_t v : layer) {
        for (int c = 1; c <= dim; ++c) {
          if (v & coord_bit(c)) continue;
          const std::uint64_t w = v | coord_bit(c);
          if (stamp[w] == t + 1 || !open(v, c) || !keep(w)) continue;
          stamp[w] = t + 1;
          next.push_back(w);
        }
      }
      layer.swap(next);
    }
    if (!layer.empty()) out.successes++;
  }
  out.estimate = static_cast<double>(out.successes) / static_cast<double>(trials);
  out.ci = wilson_interval(out.successes, trials, kZ99);
  return out;
}

std::vector<Vertex> gray_code_cycle(int d) {
  require(d >= 2 && d <= kEnumLimit, "Gray code cycle needs 2 <= d <= enumeration limit");
  const std::uint64_t n = std::uint64_t{1} << d;
  std::vector<Vertex> out;
  out.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) out.push_back(Vertex{k ^ (k >> 1)});
  return out;
}

namespace {

// Longest-path search on the 2-core of Q^d_p with Posa rotations.
class PathSearch {
 public:
  PathSearch(std::vector<std::uint64_t> adj, std::uint64_t seed) : adj_(std::move(adj)), seed_(seed) {
    const std::size_t n = adj_.size();
    alive_.assign(n, 1);
    pos_.assign(n, -1);
    free_deg_.assign(n, 0);
  }

  // Peel degree <= 1 vertices; returns the lowest vertex of the largest remaining component, or none.
  std::optional<std::uint64_t> prepare() {
    const std::size_t n = adj_.size();
    std::vector<int> deg(n);
    std::deque<std::uint64_t> peel;
    for (std::uint64_t v = 0; v < n; ++v) {
      deg[v] = std::popcount(adj_[v]);
      if (deg[v] <= 1) peel.push_back(v);
    }
    while (!peel.empty()) {
      const std::uint64_t v = peel.front();
      peel.pop_front();
      if (!alive_[v]) continue;
      alive_[v] = 0;
      for_each_nbr(v, [&](std::uint64_t w) {
        if (alive_[w] && --deg[w] == 1) peel.push_back(w);
      });
    }
    std::vector<char> seen(n, 0);
    std::optional<std::uint64_t> best;
    std::size_t best_size = 0;
    for (std::uint64_t s = 0; s < n; ++s) {
      if (!alive_[s] || seen[s]) continue;
      std::size_t size = 0;
      std::deque<std::uint64_t> q{s};
      seen[s] = 1;
      while (!q.empty()) {
        const std::uint64_t v = q.front();
        q.pop_front();
        ++size;
        for_each_nbr(v, [&](std::uint64_t w) {
          if (!seen[w]) {
            seen[w] = 1;
            q.push_back(w);
          }
        });
      }
      if (size > best_size) {
        best_size = size;
        best = s;
      }
    }
    for (std::uint64_t v = 0; v < n; ++v) {
      if (alive_[v]) for_each_nbr(v, [&](std::uint64_t) { free_deg_[v]++; });
    }
    return best;
  }

  std::vector<Vertex> run(std::uint64_t start, std::uint64_t rotations) {
    push(start);
    extend();
    std::reverse(path_.begin(), path_.end());
    reindex(0);
    extend();
    record();
    std::vector<std::uint64_t> chords;
    std::vector<std::uint64_t> fruitful;
    // A lone chord at the end can ping-pong forever; stalls hand the work to the other end.
    constexpr std::uint64_t kStallLimit = 32;
    std::uint64_t stall = 0;
    bool dead_end = false;
    bool stalled_once = false;
    auto switch_ends = [&] {
      std::reverse(path_.begin(), path_.end());
      reindex(0);
      extend();
      record();
      stall = 0;
    };
    for (std::uint64_t step = 0; step < rotations; ++step) {
      const std::size_t m = path_.size() - 1;
      chords.clear();
      fruitful.clear();
      for_each_nbr(path_[m], [&](std::uint64_t w) {
        const int j = pos_[w];
        if (j >= 0 && static_cast<std::size_t>(j) + 1 < m) {
          chords.push_back(static_cast<std::uint64_t>(j));
          if (free_deg_[path_[static_cast<std::size_t>(j) + 1]] > 0) fruitful.push_back(static_cast<std::uint64_t>(j));
        }
      });
      if (chords.empty()) {
        if (dead_end) break;
        dead_end = true;
        switch_ends();
        continue;
      }
      dead_end = false;
      const auto& pool = fruitful.empty() ? chords : fruitful;
      const std::uint64_t j = pool[prf(seed_, Stream::baseline, step) % pool.size()];
      std::reverse(path_.begin() + static_cast<std::ptrdiff_t>(j) + 1, path_.end());
      reindex(j + 1);
      const std::size_t before = path_.size();
      extend();
      record();
      stall = path_.size() > before ? 0 : stall + 1;
      if (stall >= kStallLimit) {
        if (stalled_once && absorb()) {
          extend();
          record();
          stall = 0;
        } else {
          switch_ends();
        }
        stalled_once = !stalled_once;
      }
    }
    return best_;
  }

 private:
  template <typename F>
  void for_each_nbr(std::uint64_t v, F&& f) const {
    std::uint64_t m = adj_[v];
    while (m != 0) {
      const std::uint64_t low = m & (~m + 1);
      m ^= low;
      const std::uint64_t w = v ^ low;
      if (alive_[w]) f(w);
    }
  }

  void push(std::uint64_t v) {
    pos_[v] = static_cast<int>(path_.size());
    path_.push_back(v);
    for_each_nbr(v, [&](std::uint64_t w) { free_deg_[w]--; });
  }

  // Q^d is bipartite, so the shortest detour through free vertices is a free
  // edge x-y spliced between consecutive path vertices a-b. One sweep.
  bool absorb() {
    std::vector<std::uint64_t> out;
    out.reserve(adj_.size());
    bool grew = false;
    for (std::size_t k = 0; k < path_.size(); ++k) {
      const std::uint64_t a = path_[k];
      out.push_back(a);
      if (k + 1 == path_.size() || free_deg_[a] == 0) continue;
      const std::uint64_t b = path_[k + 1];
      std::optional<std::pair<std::uint64_t, std::uint64_t>> hit;
      for_each_nbr(a, [&](std::uint64_t x) {
        if (hit || pos_[x] >= 0) return;
        for_each_nbr(x, [&](std::uint64_t y) {
          if (hit || pos_[y] >= 0 || std::popcount(y ^ b) != 1 || (adj_[y] & (y ^ b)) == 0) return;
          hit.emplace(x, y);
        });
      });
      if (!hit) continue;
      for (std::uint64_t v : {hit->first, hit->second}) {
        pos_[v] = 0;  // placeholder until the reindex below
        for_each_nbr(v, [&](std::uint64_t w) { free_deg_[w]--; });
        out.push_back(v);
      }
      grew = true;
    }
    path_.swap(out);
    reindex(0);
    return grew;
  }

  void reindex(std::size_t from) {
    for (std::size_t k = from; k < path_.size(); ++k) pos_[path_[k]] = static_cast<int>(k);
  }

  // Warnsdorff: step to the free neighbour with the fewest free neighbours.
  void extend() {
    while (true) {
      std::optional<std::uint64_t> pick;
      int pick_deg = 0;
      for_each_nbr(path_.back(), [&](std::uint64_t w) {
        if (pos_[w] >= 0) return;
        if (!pick || free_deg_[w] < pick_deg) {
          pick = w;
          pick_deg = free_deg_[w];
        }
      });
      if (!pick) return;
      push(*pick);
    }
  }

  // Best cycle closed by a chord at either end of the current path.
  void record() {
    const std::size_t m = path_.size() - 1;
    std::size_t lo = m;
    for_each_nbr(path_[m], [&](std::uint64_t w) {
      if (pos_[w] >= 0) lo = std::min(lo, static_cast<std::size_t>(pos_[w]));
    });
    std::size_t hi = 0;
    for_each_nbr(path_[0], [&](std::uint64_t w) {
      if (pos_[w] >= 0) hi = std::max(hi, static_cast<std::size_t>(pos_[w]));
    });
    const std::size_t back = m - lo + 1;
    const std::size_t front = hi + 1;
    if (std::max(back, front) < 4 || std::max(back, front) <= best_.size()) return;
    best_.clear();
    if (back >= front) {
      for (std::size_t k = lo; k <= m; ++k) best_.push_back(Vertex{path_[k]});
    } else {
      for (std::size_t k = 0; k <= hi; ++k) best_.push_back(Vertex{path_[k]});
    }
  }

  std::vector<std::uint64_t> adj_;
  std::uint64_t seed_;
  std::vector<char> alive_;
  std::vector<int> pos_;
  std::vector<int> free_deg_;
  std::vector<std::uint64_t> path_;
  std::vector<Vertex> best_;
};

}  // namespace

std::optional<std::vector<Vertex>> baseline_cycle(const EdgeOracle& eo, BaselineBudget budget) {
  const int d = eo.dim();
  if (d < 2) return std::nullopt;
  if (eo.p() >= 1.0) return gray_code_cycle(d);
  PathSearch search(open_masks(eo), eo.seed());
  const auto start = search.prepare();
  if (!start) return std::nullopt;
  const std::uint64_t rotations = budget.rotations > 0 ? budget.rotations : (std::uint64_t{1} << d) / 8;
  auto cycle = search.run(*start, rotations);
  if (cycle.empty()) return std::nullopt;
  ensure(validate_cycle(cycle, eo).valid, "baseline produced an invalid cycle");
  return cycle;
}

}  // namespace hcube
