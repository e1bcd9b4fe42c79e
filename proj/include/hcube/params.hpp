#pragma once

#include <string>
#include <vector>

namespace hcube {

enum class Mode { paper, desk };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

// Every constant of the construction. Paper mode evaluates the asymptotic
// formulas verbatim; desk mode picks values that leave room to work at d <= 24.
struct ParameterSet {
  Mode mode = Mode::desk;
  int d = 0;
  double C = 0;
  double epsilon = 0.1;
  double p = 0;
  double q1 = 1, q2 = 0, q3 = 0;
  int m1 = 0, m2 = 0, m3 = 0, m4 = 0;

  int pef_segment_len = 1;  // vertices per end segment of a forest path
  int aux_segment_len = 1;  // vertices per end segment of a short cover path
  int cover_len_lo = 1;     // edges
  int cover_len_hi = 2;
  double high_deg_delta = 0.25;

  double spread_slack = 0.25;
  double bad_cap_fraction = 0.05;  // |V_bad in a layer| <= this * |layer|

  int deg_floor = 0;
  double phase_vertex_cap = 0;
  double phase_query_cap = 0;
  double long_path_floor = 0;  // aux vertices
  double bad_path_fraction = 1;
  bool strict_queries = false;

  double leaf_target = 1;
  int iset_size = 1;
  double witness_count = 1;
  int witness_support = 1;
  int path_cap = 6;
  int stitch_k_size = 0;  // 0: every eligible coordinate
  bool discard_stalled = false;

  static ParameterSet paper(int d, double C);
  static ParameterSet desk(int d, double C);

  std::vector<std::string> violations() const;
  // Throws ConfigError listing every violation.
  void validate() const;
  // Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string serialize() const;
};

// 2 * round(x / 2).
int round_even(double x);

}  // namespace hcube
