#ifndef COALESCE_MONITOR_HPP
#define COALESCE_MONITOR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "coalesce/lbm.hpp"
#include "coalesce/step_manager.hpp"

namespace coalesce::monitor {

/// Global sum of one scalar per rank.
double monitor_reduce(std::span<const double> per_rank);

/// Introspective monitoring client: each rank contributes its local total
/// density; rank 0 logs the global sum every monitored step.
class MonitorClient {
 public:
  static constexpr std::uint32_t kTagScalar = 1;

  MonitorClient(const lbm::LatticeSlab& slab, RankId rank, RankId world_size,
                StepFilter filter = StepFilter::every_step());

  ClientSpec spec();

  /// Global mass per monitored step (root rank only).
  const std::vector<double>& log() const { return log_; }

 private:
  const lbm::LatticeSlab& slab_;
  RankId rank_;
  RankId world_;
  StepFilter filter_;
  double local_ = 0.0;
  std::map<RankId, std::shared_ptr<BufferTicket>> tickets_;
  std::vector<double> log_;
};

}  // namespace coalesce::monitor

#endif  // COALESCE_MONITOR_HPP
