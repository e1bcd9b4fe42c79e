// hcube: experiment runner for long cycles in percolated hypercubes.
// Exit codes: 0 success, 1 invalid config, 2 verification failure, 3 internal invariant violation.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "hcube/errors.hpp"
#include "hcube/layer_cover.hpp"
#include "hcube/oracle.hpp"
#include "hcube/pipeline.hpp"

namespace {

using hcube::RunConfig;

enum Exit : int { ok = 0, bad_config = 1, verify_failed = 2, invariant = 3 };

// Flags shared by every subcommand; only those given on the command line override the config file.
struct Flags {
  std::optional<int> d;
  std::optional<double> C;
  std::optional<double> p;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::string config;
  std::uint64_t trials = 100000;
  std::string cycle_out;
  std::string file;
  bool timing = false;
  int layer = 0;
  int maxlen = 4;
  double alpha = 6;
  double q = 0.6;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--d", f.d, "dimension");
  app->add_option("--C", f.C, "edge constant; p = C / d");
  app->add_option("--p", f.p, "edge probability");
  app->add_option("--seed", f.seed, "root seed");
  app->add_option("--mode", f.mode, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  app->add_option("--config", f.config, "key = value config file");
  app->add_option("--out", f.out, "output path");
  app->add_option("--workers", f.workers, "grid worker cap");
  app->add_option("--trials", f.trials, "Monte Carlo trials");
  app->add_option("--set", f.sets, "parameter override key=value (repeatable)");
}

RunConfig resolve(const Flags& f, const std::string& command) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = hcube::load_config(f.config);
  cfg.command = command;
  if (f.d) cfg.d = *f.d;
  if (f.C || f.p) {
    cfg.C = f.C;
    cfg.p = f.p;
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.mode) cfg.mode = hcube::parse_mode(*f.mode);
  if (f.out) cfg.out = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  if (f.timing) cfg.timing = true;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw hcube::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hcube::ConfigError("cannot write '" + path + "'");
  out << text;
}

int cmd_pipeline(const Flags& f) {
  const RunConfig cfg = resolve(f, "pipeline");
  std::string csv = std::string(hcube::kCsvHeader) + "\n";
  if (cfg.runner == hcube::Runner::baseline) {
    csv += hcube::csv_line(hcube::run_baseline(cfg)) + "\n";
  } else {
    const hcube::PipelineRun run = hcube::run_pipeline_full(cfg);
    csv += hcube::csv_line(run.row) + "\n";
    if (!f.cycle_out.empty()) {
      std::ofstream out(f.cycle_out);
      if (!out) throw hcube::ConfigError("cannot write '" + f.cycle_out + "'");
      hcube::write_cycle(out, run.cycle, run.row.d);
    }
    if (cfg.verbosity > 0) {
      std::cerr << fmt::format("stitched={} paths={} iterations={}\n", run.stitched, run.stitched_paths,
                               run.iterations.size());
    }
  }
  emit(csv, cfg.out);
  return ok;
}

int cmd_grid(const Flags& f) {
  const RunConfig cfg = resolve(f, "grid");
  if (cfg.grid_d.empty() && cfg.d == 0) throw hcube::ConfigError("grid needs d values");
  if (cfg.grid_p.empty() && !cfg.p && !cfg.C) throw hcube::ConfigError("grid needs p values");
  const auto rows = hcube::run_grid(cfg);
  emit(hcube::grid_csv(rows), cfg.out);
  const std::string summary = hcube::median_summary(rows);
  if (!cfg.out.empty()) {
    emit(summary, cfg.out + ".summary.csv");
    std::cout << summary;
  } else {
    std::cerr << summary;
  }
  return ok;
}

int cmd_verify(const Flags& f) {
  const RunConfig cfg = resolve(f, "verify");
  if (f.file.empty()) throw hcube::ConfigError("verify needs --file");
  const double p = cfg.p ? *cfg.p : (cfg.C ? *cfg.C / cfg.d : -1);
  if (!cfg.p && !cfg.C) throw hcube::ConfigError("verify needs --p or --C");
  const hcube::CycleReport report = hcube::verify_cycle_file(f.file, cfg.seed, cfg.d, p);
  if (report.valid) {
    std::cout << fmt::format("valid length={}\n", report.length);
    return ok;
  }
  std::cout << fmt::format("invalid index={} reason={}\n", report.index, report.reason);
  return verify_failed;
}

int cmd_mc(const Flags& f) {
  const RunConfig cfg = resolve(f, "mc-lemma");
  const int dim = cfg.d;
  const hcube::McEstimate est = hcube::mc_monotone_path(dim, f.alpha, f.q, f.trials, cfg.seed);
  const double target = std::pow(static_cast<double>(dim), -5.0);
  std::cout << "D,alpha,q,trials,successes,estimate,ci_lo,ci_hi,target,lower_ok\n";
  std::cout << fmt::format("{},{:.6g},{:.6g},{},{},{:.6g},{:.6g},{:.6g},{:.6g},{}\n", dim, f.alpha, f.q, est.trials,
                           est.successes, est.estimate, est.ci.lo, est.ci.hi, target, est.ci.lo >= target);
  return ok;
}

hcube::EdgeOracle sample(const RunConfig& cfg) {
  hcube::check_dim(cfg.d);
  if (cfg.p.has_value() == cfg.C.has_value()) throw hcube::ConfigError("give exactly one of C and p");
  const double p = cfg.p ? *cfg.p : *cfg.C / cfg.d;
  if (!(p >= 0 && p <= 1)) throw hcube::ConfigError("p must lie in [0,1]");
  return hcube::EdgeOracle(cfg.seed, cfg.d, p, false);
}

int cmd_census(const Flags& f) {
  const RunConfig cfg = resolve(f, "census");
  const hcube::EdgeOracle eo = sample(cfg);
  if (f.layer < 0 || f.layer + 1 > cfg.d) throw hcube::ConfigError("--i must satisfy 0 <= i < d");
  std::cout << "d,p,seed,i,maxlen,cycles\n";
  std::cout << fmt::format("{},{:.6g},{},{},{},{}\n", cfg.d, eo.p(), cfg.seed, f.layer, f.maxlen,
                           hcube::short_cycle_census(f.layer, f.maxlen, eo));
  return ok;
}

int cmd_brute(const Flags& f) {
  const RunConfig cfg = resolve(f, "brute");
  const hcube::EdgeOracle eo = sample(cfg);
  if (cfg.d > hcube::kBruteLimit) throw hcube::ConfigError(fmt::format("brute needs d <= {}", hcube::kBruteLimit));
  std::cout << "d,p,seed,longest_cycle\n";
  std::cout << fmt::format("{},{:.6g},{},{}\n", cfg.d, eo.p(), cfg.seed, hcube::brute_longest_cycle(eo));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long cycles in percolated hypercubes"};
  app.require_subcommand(1);
  Flags f;

  auto* pipeline = app.add_subcommand("pipeline", "run the construction once");
  add_common(pipeline, f);
  pipeline->add_option("--cycle-out", f.cycle_out, "write the emitted cycle here");
  pipeline->add_flag("--timing", f.timing, "record wall-clock runtime_ms");

  auto* grid = app.add_subcommand("grid", "run a (d, p, seed) grid to CSV");
  add_common(grid, f);
  grid->add_flag("--timing", f.timing, "record wall-clock runtime_ms");

  auto* verify = app.add_subcommand("verify", "check a cycle file against Q^d_p");
  add_common(verify, f);
  verify->add_option("--file", f.file, "cycle file")->required();

  auto* mc = app.add_subcommand("mc-lemma", "monotone-path Monte Carlo in Q^D_p(q)");
  add_common(mc, f);
  mc->add_option("--alpha", f.alpha, "p = alpha / D");
  mc->add_option("--q", f.q, "vertex retention probability");

  auto* census = app.add_subcommand("census", "count short cycles in a layer pair");
  add_common(census, f);
  census->add_option("--i", f.layer, "lower layer");
  census->add_option("--maxlen", f.maxlen, "maximum cycle length");

  auto* brute = app.add_subcommand("brute", "exact longest cycle for small d");
  add_common(brute, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : bad_config;
  }

  try {
    if (pipeline->parsed()) return cmd_pipeline(f);
    if (grid->parsed()) return cmd_grid(f);
    if (verify->parsed()) return cmd_verify(f);
    if (mc->parsed()) return cmd_mc(f);
    if (census->parsed()) return cmd_census(f);
    if (brute->parsed()) return cmd_brute(f);
  } catch (const hcube::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return verify_failed;
  } catch (const hcube::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bad_config;
  } catch (const hcube::PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return bad_config;
  } catch (const hcube::InvariantError& e) {
    std::cerr << "internal invariant violated: " << e.what() << '\n';
    return invariant;
  }
  return bad_config;
}
