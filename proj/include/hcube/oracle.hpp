#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/percolation.hpp"

namespace hcube {

// A cycle is listed once: the closing edge runs from the last vertex back to the first.
struct CycleReport {
  bool valid = false;
  std::size_t length = 0;
  std::size_t index = 0;  // first offending position when invalid
  std::string reason;
};

CycleReport validate_cycle(std::span<const Vertex> seq, int d, const EdgePredicate& open);
CycleReport validate_cycle(std::span<const Vertex> seq, const EdgeOracle& eo);

inline constexpr int kBruteLimit = 5;

// Exact longest cycle by branch and bound over open edges; 0 when acyclic.
std::size_t brute_longest_cycle(const EdgeOracle& eo);

struct Interval {
  double lo = 0;
  double hi = 1;
};

// Two-sided Wilson score interval.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z);
inline constexpr double kZ99 = 2.5758293035489;

struct McEstimate {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double estimate = 0;
  Interval ci;
  bool outside_regime = false;  // alpha <= e or q <= e / alpha
};

// Fraction of samples of Q^D_rho(q), rho = alpha / D, with an open retained
// path from the empty set to the full set climbing one layer per step.
McEstimate mc_monotone_path(int dim, double alpha, double q, std::uint64_t trials, std::uint64_t seed);

// n -> n ^ (n >> 1) over all n < 2^d.
std::vector<Vertex> gray_code_cycle(int d);

struct BaselineBudget {
  std::uint64_t rotations = 0;  // 0 picks a size-dependent default
};

// Gray code at p = 1; otherwise a greedy long path with rotations, closed by
// the best chord seen. Never returns a cycle that fails validation.
std::optional<std::vector<Vertex>> baseline_cycle(const EdgeOracle& eo, BaselineBudget budget = {});

}  // namespace hcube
