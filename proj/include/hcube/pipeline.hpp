#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hcube/cube.hpp"
#include "hcube/mog.hpp"
#include "hcube/oracle.hpp"
#include "hcube/params.hpp"

namespace hcube {

enum class Runner { pipeline, baseline };

struct RunConfig {
  std::string command = "pipeline";
  int d = 0;
  std::optional<double> C;
  std::optional<double> p;
  std::uint64_t seed = 1;
  Mode mode = Mode::desk;
  Runner runner = Runner::pipeline;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied in order
  std::vector<int> grid_d;
  std::vector<double> grid_p;
  std::vector<std::uint64_t> grid_seeds;
  std::string out;
  int workers = 1;
  int verbosity = 0;
  bool timing = false;

  // Resolves (C, p), builds the preset, applies overrides, validates.
  // Throws ConfigError.
  ParameterSet params() const;
};

// "key = value" lines; [params] holds overrides, [grid] holds comma lists
// (integers also accept a..b). Keys set in the text replace those in base.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

struct ResultRow {
  int d = 0;
  double p = 0;
  double C = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::desk;
  std::size_t cycle_length = 0;
  double fraction = 0;
  std::size_t path_count_after_mog = 0;
  double int_fraction = 0;
  std::size_t merges = 0;
  std::size_t discards = 0;
  std::int64_t runtime_ms = 0;
  std::optional<bool> valid;  // empty when nothing was emitted
};

inline constexpr const char* kCsvHeader =
    "d,p,C,seed,mode,cycle_length,fraction,path_count_after_mog,int_fraction,merges,discards,runtime_ms,valid";

std::string csv_line(const ResultRow& row);

struct PipelineRun {
  ResultRow row;
  std::vector<Vertex> cycle;
  bool stitched = false;   // false: the emitted cycle is a fallback
  std::size_t stitched_paths = 0;
  std::vector<IterationStats> iterations;
};

PipelineRun run_pipeline_full(const RunConfig& cfg);
ResultRow run_pipeline(const RunConfig& cfg);
ResultRow run_baseline(const RunConfig& cfg);

// One row per (d, p, seed) cell in lexicographic order.
std::vector<ResultRow> run_grid(const RunConfig& cfg);
std::string grid_csv(const std::vector<ResultRow>& rows);
// Median fraction per (d, p), in cell order.
std::string median_summary(const std::vector<ResultRow>& rows);

// First line is the vertex count, then one binary string per vertex.
void write_cycle(std::ostream& out, std::span<const Vertex> cycle, int d);
// Throws FormatError on malformed input; sets d from the string width.
std::vector<Vertex> read_cycle(std::istream& in, int& d);

// Re-derives Q^d_p from (seed, d, p) and checks the file against it.
CycleReport verify_cycle_file(const std::string& path, std::uint64_t seed, int d, double p);

}  // namespace hcube
