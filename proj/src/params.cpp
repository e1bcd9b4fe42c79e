#include "hcube/params.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include "hcube/errors.hpp"

namespace hcube {

std::string to_string(Mode m) { return m == Mode::paper ? "paper" : "desk"; }

Mode parse_mode(const std::string& s) {
  if (s == "paper") return Mode::paper;
  if (s == "desk") return Mode::desk;
  throw ConfigError("unknown mode '" + s + "'");
}

int round_even(double x) { return 2 * static_cast<int>(std::lround(x / 2.0)); }

ParameterSet ParameterSet::paper(int d, double C) {
  if (d < 2) throw ConfigError("dimension too small");
  if (!(C > 0)) throw ConfigError("C must be positive");
  const double dd = d;
  ParameterSet ps;
  ps.mode = Mode::paper;
  ps.d = d;
  ps.C = C;
  ps.p = C / dd;
  ps.q2 = ps.q3 = std::pow(C, -1.0 / 80.0);
  ps.q1 = 1.0 - 2.0 * ps.q2;
  ps.m1 = round_even(50.0 * std::log(dd));
  ps.m2 = round_even(dd / 2 - std::pow(dd, 0.7));
  ps.m3 = round_even(dd / 2 - std::pow(dd, 0.6));
  ps.m4 = round_even(dd / 2 + std::pow(dd, 0.6));
  ps.pef_segment_len = static_cast<int>(std::ceil(std::pow(C, 1.0 / 13.0) * dd));
  ps.aux_segment_len = static_cast<int>(std::ceil(2.0 * std::pow(C, 1.0 / 8.0)));
  ps.cover_len_lo = static_cast<int>(std::ceil(std::pow(C, 1.0 / 6.0)));
  ps.cover_len_hi = 2 * ps.cover_len_lo;
  ps.high_deg_delta = std::pow(C, -2.0 / 5.0);
  ps.spread_slack = 1.0 / C;
  ps.bad_cap_fraction = 1.0 / (dd * std::log(dd));
  ps.deg_floor = static_cast<int>(std::floor(std::pow(C, -1.0 / 14.0) * dd));
  ps.phase_vertex_cap = (1.0 / C + std::pow(C, -1.0 / 12.0)) * dd;
  ps.phase_query_cap = 2.0 * std::pow(C, -13.0 / 12.0) * dd * dd;
  ps.long_path_floor = std::pow(C, -1.0 / 12.0) * dd;
  ps.bad_path_fraction = std::min(1.0, std::pow(C, -1.0 / 700.0));
  ps.leaf_target = std::pow(dd, std::pow(C, 0.75));
  ps.iset_size = d / 6;
  ps.witness_count = std::pow(dd, 20.0);
  ps.witness_support = 2 * ps.m1;
  ps.path_cap = 6;
  ps.stitch_k_size = 2 * d / 3;
  ps.discard_stalled = true;
  return ps;
}

ParameterSet ParameterSet::desk(int d, double C) {
  if (d < 2) throw ConfigError("dimension too small");
  if (!(C > 0)) throw ConfigError("C must be positive");
  const double dd = d;
  ParameterSet ps;
  ps.mode = Mode::desk;
  ps.d = d;
  ps.C = C;
  ps.p = C / dd;
  // Growth through V_3 at m2 is the bottleneck for reaching the witness layer.
  ps.q1 = 0.2;
  ps.q2 = 0.2;
  ps.q3 = 0.6;
  // Witness leaves sit in L_2 and stitching subcubes must stay below m2,
  // so m2 = m3 = 2*m1 + 2 is the smallest band that admits one closure.
  const int half_even = 2 * (d / 4);
  ps.m1 = d >= 8 ? 2 : 0;
  ps.m2 = std::min(2 * ps.m1 + 2, half_even);
  ps.m3 = ps.m2;
  const int top_even = 2 * ((d - 1) / 2);
  ps.m4 = std::max(ps.m3, std::min(round_even(dd / 2 + std::pow(dd, 0.6)), top_even));
  ps.pef_segment_len = 2;
  ps.aux_segment_len = 2;
  ps.cover_len_lo = 3;
  ps.cover_len_hi = 6;
  ps.high_deg_delta = 0.25;
  ps.spread_slack = 2.0;
  ps.bad_cap_fraction = 0.05;
  ps.deg_floor = 0;
  ps.phase_vertex_cap = dd;
  ps.phase_query_cap = dd * dd;
  ps.long_path_floor = 2;
  ps.bad_path_fraction = std::min(1.0, std::pow(std::max(C, 1.0), -1.0 / 700.0));
  ps.leaf_target = 4;
  ps.witness_support = ps.m1;
  ps.iset_size = std::max(ps.witness_support, d / 4);
  ps.witness_count = 64;
  ps.path_cap = 6;
  ps.stitch_k_size = 0;
  ps.discard_stalled = false;
  return ps;
}

std::vector<std::string> ParameterSet::violations() const {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
  check(d >= 2, "d must be at least 2");
  check(prob(p), "p must lie in [0,1]");
  check(prob(q1) && prob(q2) && prob(q3), "class probabilities must lie in [0,1]");
  check(std::abs(q1 + q2 + q3 - 1.0) <= 1e-9, "class probabilities must sum to 1");
  check(m1 % 2 == 0 && m2 % 2 == 0 && m3 % 2 == 0 && m4 % 2 == 0, "layer parameters must be even");
  check(m1 >= 0, "m1 must be non-negative");
  check(m1 <= m2 && m2 <= m3, "need m1 <= m2 <= m3");
  check(2 * m3 <= d, "need m3 <= d/2");
  check(2 * m4 >= d, "need m4 >= d/2");
  check(m4 + 1 <= d, "need m4 + 1 <= d");
  check(pef_segment_len >= 1 && aux_segment_len >= 1, "segment lengths must be positive");
  check(cover_len_lo >= 1 && cover_len_hi >= cover_len_lo, "cover lengths out of order");
  check(2 * aux_segment_len <= cover_len_lo + 1, "aux segments would overlap on the shortest cover path");
  check(high_deg_delta >= 0 && spread_slack >= 0, "slacks must be non-negative");
  check(prob(bad_cap_fraction) && prob(bad_path_fraction), "fractions must lie in [0,1]");
  check(deg_floor >= 0, "degree floor must be non-negative");
  check(phase_vertex_cap > 0 && phase_query_cap > 0, "phase caps must be positive");
  check(long_path_floor >= 0, "long path floor must be non-negative");
  check(iset_size >= 0 && witness_support >= 0 && witness_count >= 1, "witness sizes out of range");
  check(path_cap >= 1, "path cap must be positive");
  check(stitch_k_size >= 0 && stitch_k_size < d, "stitch size out of range");
  return out;
}

void ParameterSet::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid parameters:";
  for (const auto& s : v) msg += " " + s + ";";
  throw ConfigError(msg);
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used == value.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  int x = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("bad integer value for " + key + ": '" + value + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + value + "'");
}

struct Field {
  std::function<void(ParameterSet&, const std::string&, const std::string&)> set;
  std::function<std::string(const ParameterSet&)> get;
};

template <typename T>
Field field(T ParameterSet::*member) {
  Field f;
  f.set = [member](ParameterSet& ps, const std::string& k, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      ps.*member = parse_double(k, v);
    } else if constexpr (std::is_same_v<T, bool>) {
      ps.*member = parse_bool(k, v);
    } else {
      ps.*member = parse_int(k, v);
    }
  };
  f.get = [member](const ParameterSet& ps) { return fmt::format("{}", ps.*member); };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"epsilon", field(&ParameterSet::epsilon)},
      {"q1", field(&ParameterSet::q1)},
      {"q2", field(&ParameterSet::q2)},
      {"q3", field(&ParameterSet::q3)},
      {"m1", field(&ParameterSet::m1)},
      {"m2", field(&ParameterSet::m2)},
      {"m3", field(&ParameterSet::m3)},
      {"m4", field(&ParameterSet::m4)},
      {"pef_segment_len", field(&ParameterSet::pef_segment_len)},
      {"aux_segment_len", field(&ParameterSet::aux_segment_len)},
      {"cover_len_lo", field(&ParameterSet::cover_len_lo)},
      {"cover_len_hi", field(&ParameterSet::cover_len_hi)},
      {"high_deg_delta", field(&ParameterSet::high_deg_delta)},
      {"spread_slack", field(&ParameterSet::spread_slack)},
      {"bad_cap_fraction", field(&ParameterSet::bad_cap_fraction)},
      {"deg_floor", field(&ParameterSet::deg_floor)},
      {"phase_vertex_cap", field(&ParameterSet::phase_vertex_cap)},
      {"phase_query_cap", field(&ParameterSet::phase_query_cap)},
      {"long_path_floor", field(&ParameterSet::long_path_floor)},
      {"bad_path_fraction", field(&ParameterSet::bad_path_fraction)},
      {"strict_queries", field(&ParameterSet::strict_queries)},
      {"leaf_target", field(&ParameterSet::leaf_target)},
      {"iset_size", field(&ParameterSet::iset_size)},
      {"witness_count", field(&ParameterSet::witness_count)},
      {"witness_support", field(&ParameterSet::witness_support)},
      {"path_cap", field(&ParameterSet::path_cap)},
      {"stitch_k_size", field(&ParameterSet::stitch_k_size)},
      {"discard_stalled", field(&ParameterSet::discard_stalled)},
  };
  return table;
}

}  // namespace

void ParameterSet::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown parameter '" + key + "'");
  it->second.set(*this, key, value);
}

std::string ParameterSet::serialize() const {
  std::string out = fmt::format("mode={}\nd={}\nC={}\np={}\n", to_string(mode), d, C, p);
  for (const auto& [key, f] : fields()) out += key + "=" + f.get(*this) + "\n";
  return out;
}

}  // namespace hcube
