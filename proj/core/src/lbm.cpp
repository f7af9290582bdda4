#include "coalesce/lbm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace coalesce::lbm {
namespace {

// splitmix64; decomposition-independent per-site perturbation.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double site_noise(std::uint64_t seed, std::uint64_t x, std::uint64_t gy) {
  std::uint64_t h = mix64(seed ^ mix64(gy * 0x100000001b3ULL + x));
  return static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;  // [-0.5, 0.5)
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

std::array<double, 9> equilibrium(double rho, double ux, double uy) {
  std::array<double, 9> feq;
  const double usq = 1.5 * (ux * ux + uy * uy);
  for (int i = 0; i < 9; ++i) {
    const double eu = kEx[i] * ux + kEy[i] * uy;
    feq[i] = kWeights[i] * rho * (1.0 + 3.0 * eu + 4.5 * eu * eu - usq);
  }
  return feq;
}

LatticeSlab::LatticeSlab(const LbmConfig& config, RankId rank, RankId world_size)
    : cfg_(config), rank_(rank), world_(world_size) {
  if (cfg_.tau <= 0.5) throw ConfigError("tau must be > 0.5");
  if (world_size < 1 || rank >= world_size) throw ConfigError("bad rank/world size");
  if (cfg_.ny_global % world_size != 0)
    throw ConfigError("ny must be divisible by the rank count");
  ny_local_ = cfg_.ny_global / world_size;
  if (ny_local_ < 1) throw ConfigError("ny_local must be >= 1");
  row_offset_ = static_cast<std::size_t>(rank) * ny_local_;

  const std::size_t n = cfg_.nx * (ny_local_ + 2) * 9;
  f_.assign(n, 0.0);
  fstar_.assign(n, 0.0);
  for (std::size_t row = 1; row <= ny_local_; ++row) {
    const std::uint64_t gy = row_offset_ + row - 1;
    for (std::size_t x = 0; x < cfg_.nx; ++x) {
      double rho = 1.0;
      if (cfg_.init_perturb > 0.0 && !solid_global_row(static_cast<std::ptrdiff_t>(gy)))
        rho += cfg_.init_perturb * site_noise(cfg_.seed, x, gy);
      auto feq = equilibrium(rho, 0.0, 0.0);
      for (int i = 0; i < 9; ++i) f_[idx(x, row) + i] = feq[i];
    }
  }
}

bool LatticeSlab::has_neighbor(Neighbor n) const {
  return n == Neighbor::Below ? rank_ > 0 : rank_ + 1 < world_;
}

bool LatticeSlab::is_fluid_row(std::size_t local_row) const {
  return !solid_global_row(static_cast<std::ptrdiff_t>(row_offset_ + local_row - 1));
}

void LatticeSlab::collide_row(std::size_t row, std::uint64_t step) {
  if (!is_fluid_row(row)) return;
  const double omega = 1.0 / cfg_.tau;
  const double force_scale = 1.0 - 0.5 * omega;
  for (std::size_t x = 0; x < cfg_.nx; ++x) {
    double* f = &f_[idx(x, row)];
    double rho = 0.0, mx = 0.0, my = 0.0;
    for (int i = 0; i < 9; ++i) {
      rho += f[i];
      mx += f[i] * kEx[i];
      my += f[i] * kEy[i];
    }
    if (!std::isfinite(rho))
      throw NumericalError("non-finite density at step " + std::to_string(step) +
                           ", site (" + std::to_string(x) + ", " +
                           std::to_string(row_offset_ + row - 1) + ")");
    const double fx = rho * cfg_.force_x;  // force density
    const double ux = (mx + 0.5 * fx) / rho;
    const double uy = my / rho;
    const auto feq = equilibrium(rho, ux, uy);
    double* out = &fstar_[idx(x, row)];
    for (int i = 0; i < 9; ++i) {
      // Guo forcing: S_i = (1 - 1/(2 tau)) w_i [3(e-u) + 9(e.u)e] . F
      const double eu = kEx[i] * ux + kEy[i] * uy;
      const double source =
          force_scale * kWeights[i] * (3.0 * (kEx[i] - ux) + 9.0 * eu * kEx[i]) * fx;
      out[i] = f[i] - omega * (f[i] - feq[i]) + source;
    }
  }
}

void LatticeSlab::collide_boundary(std::uint64_t step) {
  collide_row(1, step);
  if (ny_local_ > 1) collide_row(ny_local_, step);
}

void LatticeSlab::collide_interior(std::uint64_t step) {
  for (std::size_t row = 2; row < ny_local_; ++row) collide_row(row, step);
}

std::vector<std::uint8_t> LatticeSlab::pack_halo(Neighbor n) const {
  if (!has_neighbor(n)) throw ConfigError("pack_halo: no such neighbor");
  const std::size_t row = n == Neighbor::Above ? ny_local_ : 1;
  const auto& dirs = n == Neighbor::Above ? kUp : kDown;
  std::vector<std::uint8_t> out;
  out.reserve(cfg_.nx * 3 * 8);
  for (std::size_t x = 0; x < cfg_.nx; ++x)
    for (int d : dirs) put_f64(out, fstar_[idx(x, row) + d]);
  return out;
}

void LatticeSlab::unpack_halo(Neighbor n, const std::vector<std::uint8_t>& bytes) {
  if (!has_neighbor(n)) throw ConfigError("unpack_halo: no such neighbor");
  if (bytes.size() != cfg_.nx * 3 * 8)
    throw HaloFormatError("halo payload is " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(cfg_.nx * 24));
  // Data from below carries up-moving populations into ghost row 0; data
  // from above carries down-moving populations into ghost row ny_local+1.
  const std::size_t row = n == Neighbor::Below ? 0 : ny_local_ + 1;
  const auto& dirs = n == Neighbor::Below ? kUp : kDown;
  const std::uint8_t* p = bytes.data();
  for (std::size_t x = 0; x < cfg_.nx; ++x)
    for (int d : dirs) {
      fstar_[idx(x, row) + d] = get_f64(p);
      p += 8;
    }
}

void LatticeSlab::stream() {
  const auto nx = static_cast<std::ptrdiff_t>(cfg_.nx);
  for (std::size_t row = 1; row <= ny_local_; ++row) {
    if (!is_fluid_row(row)) continue;
    const auto gy = static_cast<std::ptrdiff_t>(row_offset_ + row - 1);
    for (std::ptrdiff_t x = 0; x < nx; ++x) {
      double* out = &f_[idx(static_cast<std::size_t>(x), row)];
      for (int i = 0; i < 9; ++i) {
        const std::ptrdiff_t sx = (x - kEx[i] + nx) % nx;
        const std::ptrdiff_t sgy = gy - kEy[i];
        if (solid_global_row(sgy)) {
          // Halfway bounce-back off the wall.
          out[i] = fstar_[idx(static_cast<std::size_t>(x), row) + kOpp[i]];
        } else {
          const std::size_t srow = row - static_cast<std::size_t>(kEy[i]);
          out[i] = fstar_[idx(static_cast<std::size_t>(sx), srow) + i];
        }
      }
    }
  }
}

double LatticeSlab::density(std::size_t x, std::size_t local_row) const {
  const double* f = &f_[idx(x, local_row)];
  double rho = 0.0;
  for (int i = 0; i < 9; ++i) rho += f[i];
  return rho;
}

std::array<double, 2> LatticeSlab::velocity(std::size_t x, std::size_t local_row) const {
  const double* f = &f_[idx(x, local_row)];
  double rho = 0.0, mx = 0.0, my = 0.0;
  for (int i = 0; i < 9; ++i) {
    rho += f[i];
    mx += f[i] * kEx[i];
    my += f[i] * kEy[i];
  }
  return {mx / rho + 0.5 * cfg_.force_x, my / rho};
}

double LatticeSlab::mass() const {
  double total = 0.0;
  for (std::size_t row = 1; row <= ny_local_; ++row) {
    if (!is_fluid_row(row)) continue;
    for (std::size_t x = 0; x < cfg_.nx; ++x) total += density(x, row);
  }
  return total;
}

std::vector<double> LatticeSlab::column_max_density() const {
  std::vector<double> out(cfg_.nx, 0.0);
  for (std::size_t row = 1; row <= ny_local_; ++row) {
    if (!is_fluid_row(row)) continue;
    for (std::size_t x = 0; x < cfg_.nx; ++x)
      out[x] = std::max(out[x], density(x, row));
  }
  return out;
}

void LatticeSlab::append_fields(std::vector<double>& rho, std::vector<double>& ux,
                                std::vector<double>& uy) const {
  for (std::size_t row = 1; row <= ny_local_; ++row)
    for (std::size_t x = 0; x < cfg_.nx; ++x) {
      rho.push_back(density(x, row));
      auto v = velocity(x, row);
      ux.push_back(v[0]);
      uy.push_back(v[1]);
    }
}

void write_field_dump(const std::string& path, std::uint64_t nx, std::uint64_t ny,
                      std::uint64_t step, const std::vector<double>& rho,
                      const std::vector<double>& ux, const std::vector<double>& uy) {
  std::vector<std::uint8_t> out;
  out.reserve(24 + (rho.size() + ux.size() + uy.size()) * 8);
  for (std::uint64_t v : {nx, ny, step})
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  for (const auto* field : {&rho, &ux, &uy})
    for (double v : *field) put_f64(out, v);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open dump file " + path);
  os.write(reinterpret_cast<const char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
}

LbmClient::LbmClient(const LbmConfig& config, RankId rank, RankId world_size)
    : rank_(rank), world_(world_size),
      slab_(std::make_unique<LatticeSlab>(config, rank, world_size)) {}

ClientSpec LbmClient::spec() {
  const double collide_cost_per_site_us = 0.10;
  const double stream_cost_per_site_us = 0.05;
  const std::size_t nx = slab_->nx();
  const std::size_t ny_local = slab_->ny_local();
  const std::size_t boundary_rows = ny_local > 1 ? 2 : 1;
  const std::size_t interior_rows = ny_local > 2 ? ny_local - 2 : 0;

  ClientSpec spec;
  spec.name = "lbm";

  // Boundary rows collide first so their halo payloads can ship this step;
  // payloads are captured when the request is registered.
  spec.registrations.push_back(
      {Phase::RequestPosting, StepFilter::every_step(), 10,
       collide_cost_per_site_us * static_cast<double>(nx * boundary_rows),
       [this](StepContext& ctx) {
         slab_->collide_boundary(ctx.step_index);
         if (slab_->has_neighbor(Neighbor::Above)) {
           ctx.comms.request_send(ctx.client_id, rank_ + 1, kTagUp,
                                  slab_->pack_halo(Neighbor::Above));
           from_above_ = ctx.comms.request_receive(ctx.client_id, rank_ + 1, kTagDown,
                                                   slab_->nx() * 24);
         }
         if (slab_->has_neighbor(Neighbor::Below)) {
           ctx.comms.request_send(ctx.client_id, rank_ - 1, kTagDown,
                                  slab_->pack_halo(Neighbor::Below));
           from_below_ = ctx.comms.request_receive(ctx.client_id, rank_ - 1, kTagUp,
                                                   slab_->nx() * 24);
         }
       }});

  // Interior collide overlaps the in-flight halo exchange.
  spec.registrations.push_back(
      {Phase::PreWait, StepFilter::every_step(), 10,
       collide_cost_per_site_us * static_cast<double>(nx * interior_rows),
       [this](StepContext& ctx) { slab_->collide_interior(ctx.step_index); }});

  spec.registrations.push_back(
      {Phase::PostWait, StepFilter::every_step(), 10,
       stream_cost_per_site_us * static_cast<double>(nx * ny_local),
       [this](StepContext&) {
         if (slab_->has_neighbor(Neighbor::Above))
           slab_->unpack_halo(Neighbor::Above, from_above_->read());
         if (slab_->has_neighbor(Neighbor::Below))
           slab_->unpack_halo(Neighbor::Below, from_below_->read());
         slab_->stream();
       }});
  return spec;
}

}  // namespace coalesce::lbm
