#include "coalesce/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <thread>

#include "coalesce/inproc_transport.hpp"
#include "coalesce/lbm.hpp"
#include "coalesce/monitor.hpp"
#include "coalesce/tcp_transport.hpp"
#include "coalesce/vis.hpp"

namespace coalesce::bench {
namespace {

StepFilter image_filter(std::uint64_t steps, std::uint64_t images) {
  if (images == 0) return StepFilter::every_step();  // client disabled anyway
  // Evenly spaced: every k-th step, last step of each interval.
  const std::uint64_t k = std::max<std::uint64_t>(1, steps / images);
  return StepFilter{k, k - 1};
}

std::string fmt3(double v) {
  // Three significant digits for the rendered table.
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

void validate(const BenchConfig& config) {
  if (config.ranks < 1) throw ConfigError("ranks must be >= 1");
  if (config.images > config.steps) throw ConfigError("images must be <= steps");
  if (config.ny % config.ranks != 0) throw ConfigError("ny must be divisible by ranks");
  if (config.transport != "inproc" && config.transport != "tcp")
    throw ConfigError("transport must be \"inproc\" or \"tcp\"");
  if (config.tau <= 0.5) throw ConfigError("tau must be > 0.5");
}

ModeRunResult run_one(const BenchConfig& config, Mode mode) {
  validate(config);

  std::unique_ptr<Transport> transport;
  if (config.transport == "tcp")
    transport = std::make_unique<TcpTransport>(config.ranks);
  else
    transport = std::make_unique<InprocTransport>(config.ranks, config.cost);

  lbm::LbmConfig lbm_config;
  lbm_config.nx = config.nx;
  lbm_config.ny_global = config.ny;
  lbm_config.tau = config.tau;
  lbm_config.force_x = config.force;
  lbm_config.seed = config.seed;
  lbm_config.init_perturb = 1e-4;

  const StepFilter vis_filter = image_filter(config.steps, config.images);

  struct RankState {
    std::unique_ptr<CommsManager> comms;
    std::unique_ptr<StepManager> steps;
    std::unique_ptr<lbm::LbmClient> lbm;
    std::unique_ptr<vis::VisClient> vis;
    std::unique_ptr<monitor::MonitorClient> monitor;
    RunReport report;
    std::vector<std::string> trace;
    std::exception_ptr failure;
  };
  std::vector<RankState> ranks(config.ranks);

  for (RankId r = 0; r < config.ranks; ++r) {
    RankState& state = ranks[r];
    state.comms = std::make_unique<CommsManager>(*transport, r);
    state.steps = std::make_unique<StepManager>(*state.comms, mode);
    if (r == 0 && !config.trace_path.empty())
      state.steps->set_trace_sink(
          [&state](const std::string& line) { state.trace.push_back(line); });

    state.lbm = std::make_unique<lbm::LbmClient>(lbm_config, r, config.ranks);
    state.steps->register_client(state.lbm->spec());

    state.vis = std::make_unique<vis::VisClient>(
        state.lbm->slab(), r, config.ranks, vis_filter,
        r == 0 ? config.render_dir : std::string{});
    state.steps->register_client(config.images > 0 ? state.vis->spec()
                                                   : ClientSpec{"vis", true, {}});

    if (config.monitor) {
      state.monitor = std::make_unique<monitor::MonitorClient>(state.lbm->slab(), r,
                                                               config.ranks);
      state.steps->register_client(state.monitor->spec());
    }
  }

  std::vector<std::thread> workers;
  workers.reserve(config.ranks);
  for (RankId r = 0; r < config.ranks; ++r) {
    workers.emplace_back([&, r] {
      try {
        ranks[r].report = ranks[r].steps->run(config.steps);
      } catch (...) {
        ranks[r].failure = std::current_exception();
        transport->close();  // unblock peers stuck in wait_all
      }
    });
  }
  for (auto& t : workers) t.join();
  // Prefer a root-cause failure over secondary shutdown errors on peers.
  std::exception_ptr failure;
  for (RankState& state : ranks) {
    if (!state.failure) continue;
    if (!failure) failure = state.failure;
    try {
      std::rethrow_exception(state.failure);
    } catch (const ShutdownError&) {
    } catch (...) {
      failure = state.failure;
      break;
    }
  }
  if (failure) std::rethrow_exception(failure);

  ModeRunResult result;
  result.row.images = config.images;
  result.row.mode = mode;
  for (const RankState& state : ranks) {
    const RunReport& rep = state.report;
    result.row.total_s = std::max(result.row.total_s, rep.total_us / 1e6);
    result.row.comm_s = std::max(result.row.comm_s, rep.comm_us / 1e6);
    result.row.vis_s = std::max(result.row.vis_s, rep.vis_us / 1e6);
    result.row.sync_points = std::max(result.row.sync_points, rep.sync_points);
    result.row.messages += rep.messages_sent;
    result.row.bytes += rep.bytes_on_wire;
  }

  std::vector<double> rho, ux, uy;
  for (RankState& state : ranks) state.lbm->slab().append_fields(rho, ux, uy);
  result.fields.reserve(rho.size() * 3);
  result.fields.insert(result.fields.end(), rho.begin(), rho.end());
  result.fields.insert(result.fields.end(), ux.begin(), ux.end());
  result.fields.insert(result.fields.end(), uy.begin(), uy.end());

  result.trace = std::move(ranks[0].trace);
  if (ranks[0].monitor) result.monitor_log = ranks[0].monitor->log();
  if (config.images > 0) {
    result.image_steps = ranks[0].vis->steps_rendered();
    ranks[0].vis->flush_manifest();
  }

  for (RankState& state : ranks) {
    state.report.step_reports.clear();  // keep the result light
    result.per_rank.push_back(std::move(state.report));
  }
  return result;
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  validate(config);
  std::vector<BenchRow> rows;
  std::vector<std::string> trace;

  std::optional<ModeRunResult> coalesced, direct;
  if (config.mode != ModeChoice::Direct) {
    coalesced = run_one(config, Mode::Coalesced);
    rows.push_back(coalesced->row);
    trace = coalesced->trace;
  }
  if (config.mode != ModeChoice::Coalesced) {
    direct = run_one(config, Mode::Direct);
    rows.push_back(direct->row);
    if (trace.empty()) trace = direct->trace;
  }

  if (coalesced && direct && coalesced->fields != direct->fields)
    throw TransparencyError(
        "coalesced and direct runs diverged: simulation fields are not bit-identical");

  if (!config.out_csv.empty()) {
    std::ofstream os(config.out_csv, std::ios::app);
    if (!os) throw ConfigError("cannot open CSV file " + config.out_csv);
    os.seekp(0, std::ios::end);
    if (os.tellp() == 0) os << csv_header() << "\n";
    for (const BenchRow& row : rows) os << csv_line(row) << "\n";
  }
  if (!config.trace_path.empty()) {
    std::ofstream os(config.trace_path);
    if (!os) throw ConfigError("cannot open trace file " + config.trace_path);
    for (const std::string& line : trace) os << line << "\n";
  }
  return rows;
}

double overhead_ratio(double coalesced_comm, double direct_comm) {
  if (direct_comm <= 0.0)
    throw UndefinedRatioError("overhead ratio undefined: direct comm time is zero");
  return coalesced_comm / direct_comm;
}

double per_image_vis_time(double vis_time, std::uint64_t images) {
  if (images == 0)
    throw UndefinedRatioError("per-image time undefined for zero images");
  return vis_time / static_cast<double>(images);
}

std::string csv_header() {
  return "images,mode,total_s,comm_s,vis_s,sync_points,messages,bytes";
}

std::string csv_line(const BenchRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%s,%.9g,%.9g,%.9g,%llu,%llu,%llu",
                static_cast<unsigned long long>(row.images),
                std::string(mode_name(row.mode)).c_str(), row.total_s, row.comm_s,
                row.vis_s, static_cast<unsigned long long>(row.sync_points),
                static_cast<unsigned long long>(row.messages),
                static_cast<unsigned long long>(row.bytes));
  return buf;
}

std::string format_table(const std::vector<BenchRow>& rows) {
  // Comm time counts request posting plus the wait.
  std::string out;
  out += "# of images | Coalesced Comm. | Total time [s] | Comm. time [s] | Vis. time [s]\n";
  out += "------------+-----------------+----------------+----------------+--------------\n";
  for (const BenchRow& row : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%11llu | %-15s | %14s | %14s | %13s\n",
                  static_cast<unsigned long long>(row.images),
                  row.mode == Mode::Coalesced ? "enabled" : "disabled",
                  fmt3(row.total_s).c_str(), fmt3(row.comm_s).c_str(),
                  fmt3(row.vis_s).c_str());
    out += line;
  }
  return out;
}

}  // namespace coalesce::bench
