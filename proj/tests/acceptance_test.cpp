// Acceptance suite: one test case per criterion, each printing PASS/FAIL.
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "coalesce/bench.hpp"
#include "coalesce/inproc_transport.hpp"
#include "coalesce/lbm.hpp"
#include "coalesce/wire.hpp"

using namespace coalesce;
using namespace coalesce::bench;

namespace {

void report(const std::string& name, bool ok) {
  std::printf("[acceptance] %s: %s\n", name.c_str(), ok ? "PASS" : "FAIL");
  std::fflush(stdout);
}

BenchConfig default_workload() {
  return BenchConfig{};  // 4 ranks, 2000 steps, 64x64, monitor on
}

}  // namespace

TEST_CASE("criterion 1: sync-point law") {
  BenchConfig cfg = default_workload();
  cfg.monitor = false;       // 2 clients: lbm + vis
  cfg.images = cfg.steps;    // vis active on every step
  auto coalesced = run_one(cfg, Mode::Coalesced);
  auto direct = run_one(cfg, Mode::Direct);
  const bool ok = coalesced.row.sync_points == 2000 && direct.row.sync_points == 4000;
  report("criterion 1: sync points 2000 coalesced / 4000 direct", ok);
  CHECK(coalesced.row.sync_points == 2000);
  CHECK(direct.row.sync_points == 4000);
}

TEST_CASE("criterion 2: overhead ratio vs image count") {
  const std::vector<std::uint64_t> image_counts = {10, 100, 200};
  std::vector<double> ratios;
  for (std::uint64_t images : image_counts) {
    BenchConfig cfg = default_workload();
    cfg.images = images;
    auto c = run_one(cfg, Mode::Coalesced);
    auto d = run_one(cfg, Mode::Direct);
    ratios.push_back(overhead_ratio(c.row.comm_s, d.row.comm_s));
  }

  bool below = true;
  for (double r : ratios) below = below && r < 0.8;
  report("criterion 2a: overhead ratio < 0.8 for images in {10,100,200}", below);
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    INFO("images=", image_counts[i], " ratio=", ratios[i]);
    CHECK(ratios[i] < 0.8);
  }

  const bool monotone = ratios[0] <= ratios[1] && ratios[1] <= ratios[2];
  report("criterion 2b: ratio monotonically non-decreasing in image count", monotone);
  INFO("ratios: ", ratios[0], " ", ratios[1], " ", ratios[2]);
  CHECK(monotone);

  // Determinism under the virtual clock: an identical rerun must agree exactly.
  BenchConfig cfg = default_workload();
  cfg.images = 10;
  auto a = run_one(cfg, Mode::Coalesced);
  auto b = run_one(cfg, Mode::Coalesced);
  const bool deterministic = a.row.comm_s == b.row.comm_s &&
                             a.row.total_s == b.row.total_s &&
                             a.row.sync_points == b.row.sync_points &&
                             a.fields == b.fields;
  report("criterion 2c: deterministic under the virtual clock", deterministic);
  CHECK(deterministic);
}

TEST_CASE("criterion 3: published comparison arithmetic") {
  const double r1 = overhead_ratio(2.36, 4.07);
  const double r2 = overhead_ratio(3.13, 5.15);
  const double r3 = overhead_ratio(3.82, 6.07);
  const double per_image = per_image_vis_time(0.68, 200);
  const bool ok = std::abs(r1 - 0.580) <= 0.001 && std::abs(r2 - 0.608) <= 0.001 &&
                  std::abs(r3 - 0.629) <= 0.001 &&
                  std::round(per_image * 1e4) / 1e4 == 0.0034;
  const bool in_band = r1 >= 0.57 && r3 <= 0.63;
  report("criterion 3: table arithmetic (0.580/0.608/0.629, 0.0034)", ok && in_band);
  CHECK(r1 == doctest::Approx(0.580).epsilon(0.002));
  CHECK(r2 == doctest::Approx(0.608).epsilon(0.002));
  CHECK(r3 == doctest::Approx(0.629).epsilon(0.002));
  CHECK(per_image == doctest::Approx(0.0034).epsilon(1e-9));
  CHECK(in_band);
}

TEST_CASE("criterion 4: mode transparency after 500 steps") {
  BenchConfig cfg = default_workload();
  cfg.steps = 500;
  cfg.images = 10;
  auto coalesced = run_one(cfg, Mode::Coalesced);
  auto direct = run_one(cfg, Mode::Direct);
  const bool ok = !coalesced.fields.empty() && coalesced.fields == direct.fields;
  report("criterion 4: coalesced/direct fields bit-identical", ok);
  CHECK(ok);
}

TEST_CASE("criterion 5: Poiseuille physics oracle") {
  lbm::LbmConfig cfg;
  cfg.nx = 8;
  cfg.ny_global = 32;
  cfg.tau = 0.8;
  cfg.force_x = 1e-6;
  lbm::LatticeSlab slab(cfg, 0, 1);
  auto advance = [&](std::uint64_t from, std::uint64_t n) {
    for (std::uint64_t s = from; s < from + n; ++s) {
      slab.collide_boundary(s);
      slab.collide_interior(s);
      slab.stream();
    }
  };
  advance(0, 20000);

  double u_center = 0.0;
  for (std::size_t row = 1; row <= slab.ny_local(); ++row)
    if (slab.is_fluid_row(row)) u_center = std::max(u_center, slab.velocity(0, row)[0]);
  const double nu = (cfg.tau - 0.5) / 3.0;
  const double h = static_cast<double>(cfg.ny_global - 2);
  const double u_analytic = cfg.force_x * h * h / (8.0 * nu);
  const double rel_err = std::abs(u_center - u_analytic) / u_analytic;
  const bool velocity_ok = rel_err < 0.02;
  report("criterion 5a: centerline velocity within 2% of g(ny-2)^2/(8 nu)",
         velocity_ok);
  INFO("u_center=", u_center, " analytic=", u_analytic, " rel_err=", rel_err);
  CHECK(velocity_ok);

  const double m0 = slab.mass();
  advance(20000, 1000);
  const double drift = std::abs(slab.mass() - m0) / m0;
  const bool mass_ok = drift <= 1e-10;
  report("criterion 5b: relative mass drift <= 1e-10 over 1000 steps", mass_ok);
  CHECK(mass_ok);
}

TEST_CASE("criterion 6: wire format properties") {
  using namespace coalesce::wire;
  std::mt19937_64 rng(777);
  bool round_trips = true;
  for (int i = 0; i < 10000 && round_trips; ++i) {
    Envelope env;
    env.step_index = rng();
    std::uniform_int_distribution<std::size_t> n_subs(0, 6);
    std::uniform_int_distribution<std::size_t> len_dist(0, 48);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    const std::size_t n = n_subs(rng);
    for (std::size_t s = 0; s < n; ++s) {
      SubMessage sub;
      sub.client_id = static_cast<std::uint32_t>(s);  // canonical by construction
      sub.tag = static_cast<std::uint32_t>(rng() % 4);
      sub.payload.resize(len_dist(rng));
      for (auto& b : sub.payload) b = static_cast<std::uint8_t>(byte_dist(rng));
      env.sub_messages.push_back(std::move(sub));
    }
    std::size_t expected = 17;
    for (const auto& sub : env.sub_messages) expected += 16 + sub.payload.size();
    auto bytes = encode(env);
    round_trips = bytes.size() == expected && decode(bytes) == env;
  }
  report("criterion 6a: 10000 randomized round-trips with exact sizes", round_trips);
  CHECK(round_trips);

  Envelope env;
  env.sub_messages.push_back({1, 2, {0xAB}});
  auto good = encode(env);
  auto fault_of = [](std::vector<std::uint8_t> bytes) {
    try {
      decode(bytes);
      return static_cast<int>(-1);
    } catch (const DecodeError& e) {
      return static_cast<int>(e.fault());
    }
  };
  auto bad_magic = good, bad_version = good, short_read = good, trailing = good;
  bad_magic[0] ^= 0xFF;
  bad_version[4] = 0x7F;
  short_read.resize(good.size() - 1);
  trailing.push_back(0x00);
  const bool faults_ok =
      fault_of(bad_magic) == static_cast<int>(DecodeFault::BadMagic) &&
      fault_of(bad_version) == static_cast<int>(DecodeFault::BadVersion) &&
      fault_of(short_read) == static_cast<int>(DecodeFault::ShortRead) &&
      fault_of(trailing) == static_cast<int>(DecodeFault::TrailingGarbage);
  report("criterion 6b: four malformation classes yield distinct errors", faults_ok);
  CHECK(faults_ok);
}

TEST_CASE("criterion 7: trace conformance for a 2-client step") {
  InprocTransport transport(1);
  CommsManager comms(transport, 0);
  StepManager manager(comms, Mode::Coalesced);
  std::vector<std::string> trace;
  manager.set_trace_sink([&](const std::string& line) { trace.push_back(line); });
  for (int c = 0; c < 2; ++c) {
    ClientSpec spec;
    spec.name = "client" + std::to_string(c);
    for (Phase p : {Phase::RequestPosting, Phase::PreReceive, Phase::PreSend,
                    Phase::PreWait, Phase::PostWait, Phase::EndStep})
      spec.registrations.push_back({p, {}, 0, 0.0, [](StepContext&) {}});
    manager.register_client(std::move(spec));
  }
  manager.run_step(0);

  const std::vector<std::string> golden = {
      "step=0 phase=RequestPosting client=0 event=callback",
      "step=0 phase=RequestPosting client=1 event=callback",
      "step=0 phase=PreReceive client=0 event=callback",
      "step=0 phase=PreReceive client=1 event=callback",
      "step=0 phase=ReceivePost client=- event=post",
      "step=0 phase=PreSend client=0 event=callback",
      "step=0 phase=PreSend client=1 event=callback",
      "step=0 phase=SendPost client=- event=post",
      "step=0 phase=PreWait client=0 event=callback",
      "step=0 phase=PreWait client=1 event=callback",
      "step=0 phase=PostWait client=0 event=callback",
      "step=0 phase=PostWait client=1 event=callback",
      "step=0 phase=EndStep client=0 event=callback",
      "step=0 phase=EndStep client=1 event=callback",
  };
  const bool trace_ok = trace == golden;
  report("criterion 7a: golden trace ordering", trace_ok);
  CHECK(trace == golden);

  // A ticket may not be read before the Wait completes.
  InprocTransport pair(2);
  CommsManager cm(pair, 0);
  cm.begin_step(0);
  cm.set_phase(Phase::RequestPosting);
  auto ticket = cm.request_receive(0, 1, 1, 64);
  bool rejected = false;
  try {
    ticket->read();
  } catch (const BufferNotReadyError&) {
    rejected = true;
  }
  report("criterion 7b: ticket read rejected before Wait", rejected);
  CHECK(rejected);
}

TEST_CASE("criterion 8: decomposition transparency") {
  BenchConfig cfg = default_workload();
  cfg.steps = 100;
  cfg.images = 0;
  cfg.monitor = false;
  cfg.nx = 32;
  cfg.ny = 32;
  cfg.ranks = 1;
  auto one = run_one(cfg, Mode::Coalesced);
  cfg.ranks = 4;
  auto four = run_one(cfg, Mode::Coalesced);
  REQUIRE(one.fields.size() == four.fields.size());
  bool agree = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < one.fields.size(); ++i) {
    const double diff = std::abs(one.fields[i] - four.fields[i]);
    const double tol = 1e-12 * std::max(1.0, std::abs(one.fields[i]));
    worst = std::max(worst, diff);
    agree = agree && diff <= tol;
  }
  report("criterion 8: 1-rank vs 4-rank fields agree to 1e-12", agree);
  INFO("worst absolute difference: ", worst);
  CHECK(agree);
}
