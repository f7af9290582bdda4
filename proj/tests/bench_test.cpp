#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "coalesce/bench.hpp"
#include "coalesce/monitor.hpp"

using namespace coalesce;
using namespace coalesce::bench;

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

BenchConfig small_config() {
  BenchConfig cfg;
  cfg.ranks = 2;
  cfg.steps = 20;
  cfg.images = 4;
  cfg.nx = 8;
  cfg.ny = 8;
  cfg.seed = 5;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("overhead ratios reproduce the published comparison") {
  CHECK(round3(overhead_ratio(2.36, 4.07)) == doctest::Approx(0.580));
  CHECK(round3(overhead_ratio(3.13, 5.15)) == doctest::Approx(0.608));
  CHECK(round3(overhead_ratio(3.82, 6.07)) == doctest::Approx(0.629));
}

TEST_CASE("per-image visualization time") {
  CHECK(per_image_vis_time(0.68, 200) == doctest::Approx(0.0034));
  CHECK_THROWS_AS(per_image_vis_time(1.0, 0), UndefinedRatioError);
}

TEST_CASE("ratio with zero direct time is undefined") {
  CHECK_THROWS_AS(overhead_ratio(1.0, 0.0), UndefinedRatioError);
  CHECK_THROWS_AS(overhead_ratio(1.0, -2.0), UndefinedRatioError);
}

TEST_CASE("monitor reduce sums the per-rank scalars") {
  const std::vector<double> vals = {1.5, 2.25, -0.75};
  CHECK(monitor::monitor_reduce(vals) == doctest::Approx(3.0));
  CHECK(monitor::monitor_reduce({}) == 0.0);
}

TEST_CASE("config validation") {
  BenchConfig cfg = small_config();
  SUBCASE("images may not exceed steps") {
    cfg.images = cfg.steps + 1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  }
  SUBCASE("ny must divide evenly over ranks") {
    cfg.ny = 9;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  }
  SUBCASE("unknown transport") {
    cfg.transport = "udp";
    CHECK_THROWS_AS(validate(cfg), ConfigError);
  }
}

TEST_CASE("end-to-end comparison run: coalesced beats direct on comm and syncs") {
  BenchConfig cfg = small_config();
  auto rows = run_bench(cfg);  // throws TransparencyError if fields diverge
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mode == Mode::Coalesced);
  CHECK(rows[1].mode == Mode::Direct);
  CHECK(rows[0].comm_s < rows[1].comm_s);
  CHECK(rows[0].sync_points < rows[1].sync_points);
  CHECK(rows[0].messages < rows[1].messages);
  CHECK(rows[0].vis_s == doctest::Approx(rows[1].vis_s));

  // 3 clients active on monitored image steps -> direct pays 3 syncs/step.
  CHECK(rows[0].sync_points == cfg.steps);
  CHECK(rows[1].sync_points == 2 * cfg.steps + cfg.images);
}

TEST_CASE("image steps are evenly spaced and the monitor sees constant mass") {
  BenchConfig cfg = small_config();
  auto result = run_one(cfg, Mode::Coalesced);
  CHECK(result.image_steps == std::vector<std::uint64_t>{4, 9, 14, 19});
  REQUIRE(result.monitor_log.size() == cfg.steps);
  for (double m : result.monitor_log)
    CHECK(m == doctest::Approx(result.monitor_log.front()).epsilon(1e-12));
}

TEST_CASE("zero images disables visualization entirely") {
  BenchConfig cfg = small_config();
  cfg.images = 0;
  auto result = run_one(cfg, Mode::Coalesced);
  CHECK(result.row.vis_s == 0.0);
  CHECK(result.image_steps.empty());
}

TEST_CASE("csv output is deterministic across identical runs") {
  CHECK(csv_header() == "images,mode,total_s,comm_s,vis_s,sync_points,messages,bytes");
  BenchRow row;
  row.images = 10;
  row.mode = Mode::Direct;
  row.total_s = 1.25;
  row.comm_s = 0.5;
  row.vis_s = 0.125;
  row.sync_points = 7;
  row.messages = 3;
  row.bytes = 4096;
  CHECK(csv_line(row) == "10,direct,1.25,0.5,0.125,7,3,4096");

  BenchConfig cfg = small_config();
  const std::string a = "bench_test_a.csv", b = "bench_test_b.csv";
  std::remove(a.c_str());
  std::remove(b.c_str());
  cfg.out_csv = a;
  run_bench(cfg);
  cfg.out_csv = b;
  run_bench(cfg);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("comparison run over the tcp transport stays transparent") {
  BenchConfig cfg = small_config();
  cfg.transport = "tcp";
  cfg.steps = 5;
  cfg.images = 1;
  auto rows = run_bench(cfg);  // transparency checked internally
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].total_s > 0.0);
}
