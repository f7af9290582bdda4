#ifndef COALESCE_VIS_HPP
#define COALESCE_VIS_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coalesce/lbm.hpp"
#include "coalesce/step_manager.hpp"

namespace coalesce::vis {

/// Per-rank partial image: one density extremum per column.
struct PartialImage {
  RankId rank = 0;
  std::uint64_t step_index = 0;
  std::vector<double> columns;
};

/// Column-wise maximum of density over the slab's local fluid rows.
PartialImage render_local(const lbm::LatticeSlab& slab, RankId rank,
                          std::uint64_t step_index);

/// Element-wise maximum across one partial per rank.
std::vector<double> composite(const std::vector<PartialImage>& partials);

/// Binary 16-bit PGM (P5), one row, max-normalized per image.
void write_pgm(const std::string& path, const std::vector<double>& columns);

/// In-situ visualization client: non-root ranks send their partial to rank 0
/// on image steps; rank 0 composites and emits img_<step>.pgm plus a
/// manifest of rendered steps.
class VisClient {
 public:
  static constexpr std::uint32_t kTagPartial = 1;

  VisClient(const lbm::LatticeSlab& slab, RankId rank, RankId world_size,
            StepFilter image_filter, std::string output_dir = {});

  ClientSpec spec();

  const std::vector<std::uint64_t>& steps_rendered() const { return steps_rendered_; }
  const std::vector<std::vector<double>>& images() const { return images_; }

  /// Writes the manifest file (root rank, output dir set).
  void flush_manifest() const;

 private:
  const lbm::LatticeSlab& slab_;
  RankId rank_;
  RankId world_;
  StepFilter filter_;
  std::string output_dir_;
  PartialImage own_partial_;
  std::map<RankId, std::shared_ptr<BufferTicket>> tickets_;
  std::vector<std::uint64_t> steps_rendered_;
  std::vector<std::vector<double>> images_;  // root only
};

}  // namespace coalesce::vis

#endif  // COALESCE_VIS_HPP
