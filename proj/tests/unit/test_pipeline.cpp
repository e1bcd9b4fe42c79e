#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hcube/errors.hpp"
#include "hcube/pipeline.hpp"

using namespace hcube;

namespace {

RunConfig cell(int d, double p, std::uint64_t seed) {
  RunConfig cfg;
  cfg.d = d;
  cfg.p = p;
  cfg.seed = seed;
  return cfg;
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hcube_test_" + name);
}

}  // namespace

TEST_CASE("config resolves exactly one of C and p") {
  RunConfig cfg;
  cfg.d = 16;
  CHECK_THROWS_AS(cfg.params(), ConfigError);
  cfg.C = 8;
  CHECK(cfg.params().p == doctest::Approx(0.5));
  cfg.p = 0.5;
  CHECK_THROWS_AS(cfg.params(), ConfigError);
  cfg.p.reset();
  cfg.C = 20;
  CHECK_THROWS_AS(cfg.params(), ConfigError);
  cfg.C = 8;
  cfg.d = 30;
  CHECK_THROWS_AS(cfg.params(), ConfigError);
  cfg.d = 16;
  cfg.mode = Mode::paper;
  CHECK_THROWS_AS(cfg.params(), ConfigError);
}

TEST_CASE("config text parses keys, params and grid ranges") {
  std::istringstream text(R"(# sweep
command = grid
C = 4
mode = desk
runner = baseline
workers = 3
[params]
cover_len_lo = 4
[grid]
d = 10, 12
p = 0.5,1.0
seeds = 1..4
)");
  const RunConfig cfg = parse_config(text);
  CHECK(cfg.command == "grid");
  CHECK(cfg.C == 4);
  CHECK(cfg.runner == Runner::baseline);
  CHECK(cfg.workers == 3);
  CHECK(cfg.grid_d == std::vector<int>{10, 12});
  CHECK(cfg.grid_p == std::vector<double>{0.5, 1.0});
  CHECK(cfg.grid_seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
  REQUIRE(cfg.overrides.size() == 1);
  CHECK(cfg.overrides[0] == std::pair<std::string, std::string>{"cover_len_lo", "4"});
}

TEST_CASE("config errors") {
  auto parse = [](const char* s) {
    std::istringstream in(s);
    return parse_config(in);
  };
  CHECK_THROWS_AS(parse("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse("d 12\n"), ConfigError);
  CHECK_THROWS_AS(parse("d = twelve\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nseeds = 5..2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[grid]\nwidth = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("runner = fast\n"), ConfigError);
  std::istringstream bad_override("d = 12\np = 0.5\n[params]\nno_such = 1\n");
  CHECK_THROWS_AS(parse_config(bad_override).params(), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/hcube.cfg"), ConfigError);
}

TEST_CASE("CSV rows follow the fixed schema") {
  CHECK(std::string(kCsvHeader) ==
        "d,p,C,seed,mode,cycle_length,fraction,path_count_after_mog,int_fraction,merges,discards,runtime_ms,valid");
  ResultRow row;
  row.d = 12;
  row.p = 0.5;
  row.C = 6;
  row.seed = 7;
  row.cycle_length = 4000;
  row.fraction = 4000.0 / 4096;
  row.valid = true;
  CHECK(csv_line(row) == "12,0.5,6,7,desk,4000,0.976562,0,0.000000,0,0,0,true");
  row.valid.reset();
  CHECK(csv_line(row).ends_with(",na"));
}

TEST_CASE("pipeline at d=12, p=1 emits a validated cycle") {
  const PipelineRun run = run_pipeline_full(cell(12, 1.0, 2));
  REQUIRE(run.row.valid.has_value());
  CHECK(*run.row.valid);
  CHECK(run.row.cycle_length == run.cycle.size());
  CHECK(run.row.fraction == doctest::Approx(static_cast<double>(run.cycle.size()) / 4096));
  CHECK(run.row.cycle_length == 22);
}

TEST_CASE("pipeline row at d=16, C=8, seed 1 is pinned") {
  RunConfig cfg;
  cfg.d = 16;
  cfg.C = 8;
  cfg.seed = 1;
  CHECK(csv_line(run_pipeline(cfg)) == "16,0.5,8,1,desk,0,0.000000,0,0.000000,0,0,0,na");
}

TEST_CASE("stitched runs at d=14 close into validated cycles") {
  std::size_t stitched = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PipelineRun run = run_pipeline_full(cell(14, 0.8, seed));
    if (run.row.valid) CHECK(*run.row.valid);
    if (!run.stitched) continue;
    ++stitched;
    CHECK(run.stitched_paths >= 1);
    for (Vertex v : run.cycle) CHECK(layer_of(v) <= 14);
  }
  CHECK(stitched >= 1);
}

TEST_CASE("baseline rows report the whole cube at p=1") {
  const ResultRow row = run_baseline(cell(12, 1.0, 1));
  CHECK(row.cycle_length == 4096);
  CHECK(row.fraction == 1.0);
  CHECK(*row.valid);
}

TEST_CASE("grid rows are ordered, deterministic and worker-independent") {
  RunConfig cfg;
  cfg.runner = Runner::baseline;
  cfg.grid_d = {10, 8};
  cfg.grid_p = {1.0, 0.5};
  cfg.grid_seeds = {2, 1};
  cfg.workers = 1;
  const auto serial = run_grid(cfg);
  REQUIRE(serial.size() == 8);
  CHECK(serial.front().d == 8);
  CHECK(serial.front().p == 0.5);
  CHECK(serial.front().seed == 1);
  CHECK(serial.back().d == 10);
  cfg.workers = 4;
  CHECK(grid_csv(run_grid(cfg)) == grid_csv(serial));
  const std::string summary = median_summary(serial);
  CHECK(summary.starts_with("d,p,median_fraction,cells\n"));
  CHECK(summary.find("8,1,1.000000,2") != std::string::npos);

  RunConfig one;
  one.runner = Runner::baseline;
  one.grid_d = {8};
  one.grid_p = {1.0};
  one.grid_seeds = {1};
  const std::string csv = grid_csv(run_grid(one));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  RunConfig empty;
  CHECK_THROWS_AS(run_grid(empty), ConfigError);
}

TEST_CASE("cycle files round-trip and verify") {
  const RunConfig cfg = cell(10, 0.7, 3);
  const ResultRow row = run_baseline(cfg);
  REQUIRE(row.valid);
  const EdgeOracle eo(3, 10, 0.7, false);
  const auto cycle = baseline_cycle(eo);
  REQUIRE(cycle.has_value());

  const auto path = scratch("cycle.txt");
  {
    std::ofstream out(path);
    write_cycle(out, *cycle, 10);
  }
  CHECK(verify_cycle_file(path.string(), 3, 10, 0.7).valid);
  CHECK_FALSE(verify_cycle_file(path.string(), 4, 10, 0.7).valid);
  CHECK_THROWS_AS(verify_cycle_file(path.string(), 3, 12, 0.7), FormatError);

  // One flipped bit breaks adjacency at the neighbouring positions.
  std::vector<Vertex> bent = *cycle;
  bent[5] = flip(bent[5], 3);
  {
    std::ofstream out(path);
    write_cycle(out, bent, 10);
  }
  const CycleReport r = verify_cycle_file(path.string(), 3, 10, 0.7);
  CHECK_FALSE(r.valid);
  CHECK((r.index == 4 || r.index == 5));
  std::filesystem::remove(path);
}

TEST_CASE("read_cycle rejects malformed files") {
  auto read = [](const std::string& s) {
    std::istringstream in(s);
    int d = 0;
    return read_cycle(in, d);
  };
  std::ostringstream good;
  write_cycle(good, std::vector<Vertex>{Vertex{0}, Vertex{1}, Vertex{3}, Vertex{2}}, 2);
  CHECK(good.str() == "4\n00\n01\n11\n10\n");
  CHECK(read(good.str()).size() == 4);
  CHECK_THROWS_AS(read(""), FormatError);
  CHECK_THROWS_AS(read("x\n00\n"), FormatError);
  CHECK_THROWS_AS(read("4\n00\n01\n11\n"), FormatError);
  CHECK_THROWS_AS(read("2\n00\n011\n"), FormatError);
  CHECK_THROWS_AS(read("2\n00\n0a\n"), FormatError);
  CHECK_THROWS_AS(read("1\n00\n01\n"), FormatError);
}
