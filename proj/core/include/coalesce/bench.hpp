#ifndef COALESCE_BENCH_HPP
#define COALESCE_BENCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coalesce/comms_manager.hpp"
#include "coalesce/step_manager.hpp"
#include "coalesce/transport.hpp"

namespace coalesce::bench {

enum class ModeChoice { Coalesced, Direct, Both };

struct BenchConfig {
  std::uint32_t ranks = 4;
  std::uint64_t steps = 2000;
  std::uint64_t images = 10;
  ModeChoice mode = ModeChoice::Both;
  std::string transport = "inproc";  // "inproc" | "tcp"
  CostModelParams cost;
  std::size_t nx = 64;
  std::size_t ny = 64;
  double tau = 0.8;
  double force = 1e-6;
  std::uint64_t seed = 42;
  bool monitor = true;
  std::string out_csv;     // CSV path, empty = no file
  std::string trace_path;  // rank-0 event trace, empty = off
  std::string render_dir;  // PGM output directory, empty = off
};

void validate(const BenchConfig& config);

struct BenchRow {
  std::uint64_t images = 0;
  Mode mode = Mode::Coalesced;
  // Virtual seconds (inproc) or wall seconds (tcp); maximum over ranks.
  double total_s = 0.0;
  double comm_s = 0.0;
  double vis_s = 0.0;
  std::uint64_t sync_points = 0;  // per-rank maximum
  std::uint64_t messages = 0;     // summed over ranks
  std::uint64_t bytes = 0;        // summed over ranks
};

struct ModeRunResult {
  BenchRow row;
  std::vector<RunReport> per_rank;
  // Final rho, ux, uy concatenated in global row-major order.
  std::vector<double> fields;
  std::vector<std::string> trace;          // rank 0, when requested
  std::vector<double> monitor_log;         // global mass per monitored step
  std::vector<std::uint64_t> image_steps;  // steps rendered
};

/// Run one mode end to end: spawns one worker thread per rank sharing a
/// fresh transport, each running LBM + vis (+ monitor) clients.
ModeRunResult run_one(const BenchConfig& config, Mode mode);

/// Runs the configured mode(s); for Both, asserts bit-identical simulation
/// fields across modes, then appends rows to the CSV if configured.
std::vector<BenchRow> run_bench(const BenchConfig& config);

/// coalesced_comm / direct_comm, reported to 3 decimals.
double overhead_ratio(double coalesced_comm, double direct_comm);

/// vis_time / images.
double per_image_vis_time(double vis_time, std::uint64_t images);

std::string csv_header();
std::string csv_line(const BenchRow& row);
std::string format_table(const std::vector<BenchRow>& rows);

}  // namespace coalesce::bench

#endif  // COALESCE_BENCH_HPP
