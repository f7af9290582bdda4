#ifndef COALESCE_INPROC_TRANSPORT_HPP
#define COALESCE_INPROC_TRANSPORT_HPP

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "coalesce/transport.hpp"

namespace coalesce {

/// In-process transport. Ranks are worker threads sharing one instance.
/// Sends complete eagerly into per-pair FIFO queues; wait_all advances the
/// calling rank's virtual clock by sync_us + sum(alpha + beta * bytes).
class InprocTransport final : public Transport {
 public:
  explicit InprocTransport(RankId world_size, CostModelParams cost = {},
                           std::chrono::milliseconds deadlock_timeout =
                               std::chrono::milliseconds(30000));

  RankId world_size() const override { return world_size_; }

  TransferHandle post_send(RankId from, RankId to,
                           std::span<const std::uint8_t> payload) override;
  TransferHandle post_receive(RankId at, RankId from, std::size_t capacity) override;
  WaitResult wait_all(RankId rank, std::span<const TransferHandle> handles) override;
  void close() override;

  double clock_us(RankId rank) const override;
  std::uint64_t sync_points(RankId rank) const override;

  /// Sent messages not yet consumed by any receive (conservation check).
  std::size_t undelivered_count() const;

 private:
  struct PairKey {
    RankId from, to;
    auto operator<=>(const PairKey&) const = default;
  };
  struct PendingReceive {
    RankId at = 0;
    RankId from = 0;
    std::size_t capacity = 0;
    std::uint64_t seq = 0;  // per-pair matching order
  };

  void check_rank(RankId r, const char* what) const;

  const RankId world_size_;
  const CostModelParams cost_;
  const std::chrono::milliseconds timeout_;

  mutable std::mutex mutex_;
  std::condition_variable arrived_;
  bool closed_ = false;
  std::uint64_t next_handle_ = 1;
  // Per ordered pair: messages by send sequence number, plus cursors.
  std::map<PairKey, std::map<std::uint64_t, std::vector<std::uint8_t>>> inflight_;
  std::map<PairKey, std::uint64_t> send_seq_;
  std::map<PairKey, std::uint64_t> recv_seq_;
  std::map<std::uint64_t, PendingReceive> receives_;
  std::map<std::uint64_t, std::size_t> send_bytes_;  // pending send handles
  std::vector<double> clocks_us_;
  std::vector<std::uint64_t> sync_counts_;
};

}  // namespace coalesce

#endif  // COALESCE_INPROC_TRANSPORT_HPP
