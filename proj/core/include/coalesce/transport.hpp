#ifndef COALESCE_TRANSPORT_HPP
#define COALESCE_TRANSPORT_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "coalesce/errors.hpp"

namespace coalesce {

using RankId = std::uint32_t;

/// Deterministic virtual-clock parameters: per-message latency, per-byte
/// transfer cost, and cost charged per wait-all synchronization point.
struct CostModelParams {
  double alpha_us = 50.0;
  double beta_us_per_byte = 0.001;
  double sync_us = 100.0;
};

enum class Direction { Send, Receive };

struct TransferHandle {
  std::uint64_t id = 0;
  Direction direction = Direction::Send;
  RankId peer = 0;
};

struct CompletedTransfer {
  std::uint64_t handle_id = 0;
  Direction direction = Direction::Send;
  RankId peer = 0;
  /// Received bytes for receives; empty for sends.
  std::vector<std::uint8_t> payload;
  /// Bytes moved by this transfer (send payload size or received size).
  std::size_t bytes = 0;
};

struct WaitResult {
  std::vector<CompletedTransfer> completed;
  /// Cost of this wait: virtual microseconds for the in-process transport,
  /// measured wall microseconds for the socket transport.
  double cost_us = 0.0;
};

/// Non-blocking point-to-point byte transport between world_size ranks.
/// Shared by all rank workers; handles belong to the posting rank only.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual RankId world_size() const = 0;

  /// Returns immediately with a pending handle; payload captured at call time.
  /// Messages on the same (from, to) pair are delivered FIFO.
  virtual TransferHandle post_send(RankId from, RankId to,
                                   std::span<const std::uint8_t> payload) = 0;

  virtual TransferHandle post_receive(RankId at, RankId from, std::size_t capacity) = 0;

  /// Blocks the calling rank until every handle completes; counts one
  /// synchronization point. Times out with a deadlock diagnosis.
  virtual WaitResult wait_all(RankId rank, std::span<const TransferHandle> handles) = 0;

  virtual void close() = 0;

  virtual double clock_us(RankId rank) const = 0;
  virtual std::uint64_t sync_points(RankId rank) const = 0;
};

}  // namespace coalesce

#endif  // COALESCE_TRANSPORT_HPP
