#ifndef COALESCE_LBM_HPP
#define COALESCE_LBM_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coalesce/step_manager.hpp"
#include "coalesce/transport.hpp"

namespace coalesce::lbm {

// D2Q9: rest, axis directions, diagonals.
inline constexpr std::array<int, 9> kEx = {0, 1, 0, -1, 0, 1, -1, -1, 1};
inline constexpr std::array<int, 9> kEy = {0, 0, 1, 0, -1, 1, 1, -1, -1};
inline constexpr std::array<int, 9> kOpp = {0, 3, 4, 1, 2, 7, 8, 5, 6};
inline constexpr std::array<double, 9> kWeights = {
    4.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0, 1.0 / 9.0,
    1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0};

/// Up-moving (toward higher y) and down-moving population indices.
inline constexpr std::array<int, 3> kUp = {2, 5, 6};
inline constexpr std::array<int, 3> kDown = {4, 7, 8};

enum class Neighbor { Below, Above };

/// BGK equilibrium populations for the given macroscopic state.
std::array<double, 9> equilibrium(double rho, double ux, double uy);

struct LbmConfig {
  std::size_t nx = 64;
  std::size_t ny_global = 64;
  double tau = 0.8;          // relaxation time, > 0.5
  double force_x = 1e-6;     // body force along x (lattice units)
  std::uint64_t seed = 0;
  double init_perturb = 0.0; // relative amplitude of seeded density perturbation
};

/// One rank's slab of a 1-D decomposition along y, with one ghost row per
/// neighbor. Global rows 0 and ny_global-1 are solid walls (halfway
/// bounce-back); x is periodic. Collision is BGK with Guo body forcing.
class LatticeSlab {
 public:
  LatticeSlab(const LbmConfig& config, RankId rank, RankId world_size);

  std::size_t nx() const { return cfg_.nx; }
  std::size_t ny_local() const { return ny_local_; }
  std::size_t row_offset() const { return row_offset_; }  // global row of local row 1
  bool has_neighbor(Neighbor n) const;

  /// Collide the halo-adjacent rows (local rows 1 and ny_local).
  void collide_boundary(std::uint64_t step);
  /// Collide local rows 2 .. ny_local-1. Runs in the overlap window.
  void collide_interior(std::uint64_t step);

  /// Post-collide populations headed into the given neighbor, for the
  /// adjacent boundary row: 3 populations per site, site-major, f64 LE.
  std::vector<std::uint8_t> pack_halo(Neighbor n) const;
  void unpack_halo(Neighbor n, const std::vector<std::uint8_t>& bytes);

  /// Pull-stream from the post-collide field (ghosts included) and apply
  /// wall bounce-back. Completes the step.
  void stream();

  double density(std::size_t x, std::size_t local_row) const;
  /// Force-corrected macroscopic velocity.
  std::array<double, 2> velocity(std::size_t x, std::size_t local_row) const;
  bool is_fluid_row(std::size_t local_row) const;

  /// Total density over local fluid sites.
  double mass() const;

  /// Per-column maximum density over local fluid rows (0.0 where none).
  std::vector<double> column_max_density() const;

  /// rho, ux, uy for local rows in row-major global order.
  void append_fields(std::vector<double>& rho, std::vector<double>& ux,
                     std::vector<double>& uy) const;

 private:
  std::size_t idx(std::size_t x, std::size_t row) const {
    return (row * cfg_.nx + x) * 9;
  }
  bool solid_global_row(std::ptrdiff_t g) const {
    return g == 0 || g == static_cast<std::ptrdiff_t>(cfg_.ny_global) - 1;
  }
  void collide_row(std::size_t row, std::uint64_t step);

  LbmConfig cfg_;
  RankId rank_;
  RankId world_;
  std::size_t ny_local_;
  std::size_t row_offset_;
  std::vector<double> f_;      // current populations, rows 0..ny_local+1 (ghosts)
  std::vector<double> fstar_;  // post-collide
};

/// Flat binary field dump: 24-byte header (nx, ny, step as u64 LE), then
/// rho, ux, uy row-major f64 LE.
void write_field_dump(const std::string& path, std::uint64_t nx, std::uint64_t ny,
                      std::uint64_t step, const std::vector<double>& rho,
                      const std::vector<double>& ux, const std::vector<double>& uy);

/// Step-manager client wrapping a slab: registers halo exchange and the
/// interior/boundary collide split.
class LbmClient {
 public:
  static constexpr std::uint32_t kTagUp = 1;    // payload travelling toward higher y
  static constexpr std::uint32_t kTagDown = 2;

  LbmClient(const LbmConfig& config, RankId rank, RankId world_size);

  ClientSpec spec();
  LatticeSlab& slab() { return *slab_; }
  const LatticeSlab& slab() const { return *slab_; }

 private:
  RankId rank_;
  RankId world_;
  std::unique_ptr<LatticeSlab> slab_;
  std::shared_ptr<BufferTicket> from_below_;
  std::shared_ptr<BufferTicket> from_above_;
};

}  // namespace coalesce::lbm

#endif  // COALESCE_LBM_HPP
