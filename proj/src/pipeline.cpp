#include "hcube/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hcube/errors.hpp"
#include "hcube/stitch.hpp"

namespace hcube {

ParameterSet RunConfig::params() const {
  if (C.has_value() == p.has_value()) throw ConfigError("give exactly one of C and p");
  if (d < 2 || d > kEnumLimit) throw ConfigError(fmt::format("d must lie in [2, {}]", kEnumLimit));
  const double c = C ? *C : *p * d;
  ParameterSet ps = mode == Mode::paper ? ParameterSet::paper(d, c) : ParameterSet::desk(d, c);
  if (p) ps.p = *p;
  for (const auto& [key, value] : overrides) ps.set(key, value);
  ps.validate();
  return ps;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("cannot parse '" + text + "' for " + key);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) {
    if constexpr (std::is_integral_v<T>) {
      const auto dots = item.find("..");
      if (dots != std::string::npos) {
        const T lo = parse_number<T>(key, item.substr(0, dots));
        const T hi = parse_number<T>(key, item.substr(dots + 2));
        if (hi < lo) throw ConfigError("empty range in " + key);
        for (T x = lo; x <= hi; ++x) out.push_back(x);
        continue;
      }
    }
    out.push_back(parse_number<T>(key, item));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("cannot parse '" + v + "' for " + key);
}

Runner parse_runner(const std::string& v) {
  if (v == "pipeline") return Runner::pipeline;
  if (v == "baseline") return Runner::baseline;
  throw ConfigError("unknown runner '" + v + "'");
}

}  // namespace

RunConfig parse_config(std::istream& in, RunConfig cfg) {
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section", lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "params" && section != "grid") throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "params") {
      cfg.overrides.emplace_back(key, value);
    } else if (section == "grid") {
      if (key == "d") {
        cfg.grid_d = parse_list<int>(key, value);
      } else if (key == "p") {
        cfg.grid_p = parse_list<double>(key, value);
      } else if (key == "seed" || key == "seeds") {
        cfg.grid_seeds = parse_list<std::uint64_t>(key, value);
      } else {
        throw ConfigError("unknown grid key '" + key + "'");
      }
    } else if (key == "command") {
      cfg.command = value;
    } else if (key == "d") {
      cfg.d = parse_number<int>(key, value);
    } else if (key == "C") {
      cfg.C = parse_number<double>(key, value);
    } else if (key == "p") {
      cfg.p = parse_number<double>(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "mode") {
      cfg.mode = parse_mode(value);
    } else if (key == "runner") {
      cfg.runner = parse_runner(value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "workers") {
      cfg.workers = parse_number<int>(key, value);
    } else if (key == "verbosity") {
      cfg.verbosity = parse_number<int>(key, value);
    } else if (key == "timing") {
      cfg.timing = parse_bool(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, std::move(base));
}

std::string csv_line(const ResultRow& r) {
  const char* valid = !r.valid ? "na" : (*r.valid ? "true" : "false");
  return fmt::format("{},{:.6g},{:.6g},{},{},{},{:.6f},{},{:.6f},{},{},{},{}", r.d, r.p, r.C, r.seed, to_string(r.mode),
                     r.cycle_length, r.fraction, r.path_count_after_mog, r.int_fraction, r.merges, r.discards,
                     r.runtime_ms, valid);
}

namespace {

struct Stitched {
  std::vector<Vertex> cycle;
  std::size_t parts = 0;
};

std::optional<Stitched> try_stitch(const MogResult& mog, std::span<const int> paths, const ParameterSet& ps,
                                   EdgeOracle& eo) {
  const Pef& pef = mog.pef;
  const int s = static_cast<int>(paths.size());
  const int j_size = 2 * s * ps.witness_support;
  const int k_size = ps.stitch_k_size > 0 ? ps.stitch_k_size : ps.d - 1 - j_size;
  // Subcubes reach layer d - |K| + 1 inside Q_1 and must stay below the forest's upper band.
  if (k_size < s || ps.d - k_size + 1 > ps.m2) return std::nullopt;

  std::vector<int> trees;
  for (int p : paths) {
    trees.push_back(pef.paths()[static_cast<std::size_t>(p)].head);
    trees.push_back(pef.paths()[static_cast<std::size_t>(p)].tail);
  }
  const WitnessSelection sel = select_witnesses(mog.book, pef, trees, ps);
  if (!sel.allocation.ok) return std::nullopt;
  if (std::any_of(sel.sets.begin(), sel.sets.end(), [](const WitnessSet& w) { return w.witnesses.empty(); })) {
    return std::nullopt;
  }
  std::vector<StitchPath> parts;
  for (int r = 0; r < s; ++r) {
    parts.push_back(StitchPath{paths[static_cast<std::size_t>(r)], sel.sets[static_cast<std::size_t>(2 * r)].witnesses,
                               sel.sets[static_cast<std::size_t>(2 * r + 1)].witnesses});
  }
  ConnectorPlan plan;
  try {
    plan = plan_connectors(parts, sel.jset, ps.d, ps.stitch_k_size);
  } catch (const PreconditionError&) {
    return std::nullopt;
  }
  // Desk presets can put forest vertices of Q_1 at the subcubes' top layer.
  auto owned = [&pef](Vertex v) { return pef.path_of(v) >= 0 || pef.tree_of(v) >= 0; };
  std::vector<std::optional<Link>> links;
  for (int r = 0; r < s; ++r) {
    links.push_back(find_link(plan, static_cast<std::size_t>(r), eo, owned));
    if (!links.back()) return std::nullopt;
  }
  return Stitched{assemble_cycle(pef, plan, links, eo), static_cast<std::size_t>(s)};
}

std::optional<Stitched> stitch_best(const MogResult& mog, const ParameterSet& ps, EdgeOracle& eo) {
  const Pef& pef = mog.pef;
  auto reaches = [&](int tree) {
    const auto& t = pef.trees()[static_cast<std::size_t>(tree)];
    if (ps.m1 > ps.d || !mog.book.entries.contains(tree)) return false;
    const auto& layer = t.layers[static_cast<std::size_t>(ps.m1)];
    return std::any_of(layer.begin(), layer.end(), [](Vertex v) { return in_q0(v); });
  };
  std::vector<int> candidates;
  for (std::size_t p = 0; p < pef.paths().size(); ++p) {
    const PefPath& path = pef.paths()[p];
    if (path.alive && reaches(path.head) && reaches(path.tail)) candidates.push_back(static_cast<int>(p));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return pef.paths()[static_cast<std::size_t>(a)].seq.size() > pef.paths()[static_cast<std::size_t>(b)].seq.size();
  });
  for (std::size_t s = candidates.size(); s >= 1; --s) {
    if (auto st = try_stitch(mog, std::span<const int>(candidates.data(), s), ps, eo)) return st;
  }
  for (std::size_t x = 1; x < candidates.size(); ++x) {
    if (auto st = try_stitch(mog, std::span<const int>(&candidates[x], 1), ps, eo)) return st;
  }
  return std::nullopt;
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
}

void finish_row(ResultRow& row, std::span<const Vertex> cycle, const RunConfig& cfg, const ParameterSet& ps) {
  row.cycle_length = cycle.size();
  row.fraction = static_cast<double>(cycle.size()) / static_cast<double>(std::uint64_t{1} << ps.d);
  if (!cycle.empty()) {
    // The verdict comes from a fresh oracle, never from the producer.
    const EdgeOracle judge(cfg.seed, ps.d, ps.p, false);
    row.valid = validate_cycle(cycle, judge).valid;
  }
}

ResultRow base_row(const RunConfig& cfg, const ParameterSet& ps) {
  ResultRow row;
  row.d = ps.d;
  row.p = ps.p;
  row.C = ps.p * ps.d;
  row.seed = cfg.seed;
  row.mode = ps.mode;
  return row;
}

}  // namespace

PipelineRun run_pipeline_full(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ParameterSet ps = cfg.params();
  EdgeOracle eo(cfg.seed, ps.d, ps.p);
  const PartitionOracle po(cfg.seed, ps.q1, ps.q2, ps.q3);
  const MogResult mog = run_mog(ps, eo, po, ps.m1);

  PipelineRun run;
  run.row = base_row(cfg, ps);
  run.iterations = mog.iterations;
  run.row.path_count_after_mog = mog.pef.path_count();
  run.row.int_fraction = static_cast<double>(mog.pef.interior()) / static_cast<double>(std::uint64_t{1} << ps.d);
  for (const auto& it : mog.iterations) {
    run.row.merges += it.merges;
    run.row.discards += it.stalled;
  }

  if (auto st = stitch_best(mog, ps, eo)) {
    run.cycle = std::move(st->cycle);
    run.stitched = true;
    run.stitched_paths = st->parts;
  } else {
    for (const auto& it : mog.iterations) {
      if (it.longest_cover_cycle.size() > run.cycle.size()) run.cycle = it.longest_cover_cycle;
    }
  }
  finish_row(run.row, run.cycle, cfg, ps);
  if (cfg.timing) run.row.runtime_ms = elapsed_ms(t0);
  return run;
}

ResultRow run_pipeline(const RunConfig& cfg) { return run_pipeline_full(cfg).row; }

ResultRow run_baseline(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ParameterSet ps = cfg.params();
  const EdgeOracle eo(cfg.seed, ps.d, ps.p, false);
  ResultRow row = base_row(cfg, ps);
  const auto cycle = baseline_cycle(eo);
  finish_row(row, cycle ? std::span<const Vertex>(*cycle) : std::span<const Vertex>(), cfg, ps);
  if (cfg.timing) row.runtime_ms = elapsed_ms(t0);
  return row;
}

std::vector<ResultRow> run_grid(const RunConfig& cfg) {
  std::vector<int> ds = cfg.grid_d.empty() ? std::vector<int>{cfg.d} : cfg.grid_d;
  std::vector<std::uint64_t> seeds = cfg.grid_seeds.empty() ? std::vector<std::uint64_t>{cfg.seed} : cfg.grid_seeds;
  std::sort(ds.begin(), ds.end());
  std::sort(seeds.begin(), seeds.end());
  std::vector<double> ps = cfg.grid_p;
  std::sort(ps.begin(), ps.end());

  std::vector<RunConfig> cells;
  for (int d : ds) {
    auto add = [&](std::optional<double> p, std::optional<double> c) {
      for (std::uint64_t seed : seeds) {
        RunConfig cell = cfg;
        cell.d = d;
        cell.p = p;
        cell.C = c;
        cell.seed = seed;
        cells.push_back(std::move(cell));
      }
    };
    if (ps.empty()) {
      add(cfg.p, cfg.C);
    } else {
      for (double p : ps) add(p, std::nullopt);
    }
  }
  if (cells.empty()) throw ConfigError("grid is empty");
  for (const auto& cell : cells) (void)cell.params();  // reject bad cells before any work

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        rows[k] = cfg.runner == Runner::baseline ? run_baseline(cells[k]) : run_pipeline(cells[k]);
      } catch (...) {
        const std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::clamp(cfg.workers, 1, 64);
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string grid_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

std::string median_summary(const std::vector<ResultRow>& rows) {
  std::map<std::pair<int, double>, std::vector<double>> cells;
  for (const auto& r : rows) cells[{r.d, r.p}].push_back(r.fraction);
  std::string out = "d,p,median_fraction,cells\n";
  for (auto& [key, xs] : cells) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    const double med = n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    out += fmt::format("{},{:.6g},{:.6f},{}\n", key.first, key.second, med, n);
  }
  return out;
}

void write_cycle(std::ostream& out, std::span<const Vertex> cycle, int d) {
  out << cycle.size() << '\n';
  for (Vertex v : cycle) out << to_binary(v, d) << '\n';
}

std::vector<Vertex> read_cycle(std::istream& in, int& d) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty cycle file");
  std::size_t count = 0;
  {
    const std::string t = trim(line);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), count);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) throw FormatError("bad vertex count line");
  }
  std::vector<Vertex> out;
  out.reserve(count);
  d = 0;
  while (out.size() < count && std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (d == 0) d = static_cast<int>(t.size());
    if (static_cast<int>(t.size()) != d) throw FormatError(fmt::format("line {}: width differs", out.size() + 2));
    try {
      out.push_back(parse_binary(t));
    } catch (const PreconditionError& e) {
      throw FormatError(fmt::format("line {}: {}", out.size() + 2, e.what()));
    }
  }
  if (out.size() != count) throw FormatError(fmt::format("expected {} vertices, found {}", count, out.size()));
  while (std::getline(in, line)) {
    if (!trim(line).empty()) throw FormatError("trailing content after the last vertex");
  }
  return out;
}

CycleReport verify_cycle_file(const std::string& path, std::uint64_t seed, int d, double p) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  int file_d = 0;
  const auto cycle = read_cycle(in, file_d);
  if (!cycle.empty() && file_d != d) throw FormatError(fmt::format("dimension mismatch: file has {}, expected {}", file_d, d));
  if (d < 1 || d > kMaxDim) throw ConfigError("dimension out of range");
  if (p < 0 || p > 1) throw ConfigError("p must lie in [0,1]");
  const EdgeOracle eo(seed, d, p, false);
  return validate_cycle(cycle, eo);
}

}  // namespace hcube
