#ifndef COALESCE_TCP_TRANSPORT_HPP
#define COALESCE_TCP_TRANSPORT_HPP

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <vector>

#include "coalesce/transport.hpp"

namespace coalesce {

/// Loopback-socket transport: one full-duplex TCP connection over 127.0.0.1
/// per rank pair, length-prefix framed. Ranks are worker threads in one
/// process; each connection end is used by exactly one rank. wait_all reports
/// measured wall time, so this transport is excluded from determinism tests.
class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(RankId world_size,
                        std::chrono::milliseconds deadlock_timeout =
                            std::chrono::milliseconds(30000));
  ~TcpTransport() override;

  RankId world_size() const override { return world_size_; }

  TransferHandle post_send(RankId from, RankId to,
                           std::span<const std::uint8_t> payload) override;
  TransferHandle post_receive(RankId at, RankId from, std::size_t capacity) override;
  WaitResult wait_all(RankId rank, std::span<const TransferHandle> handles) override;
  void close() override;

  double clock_us(RankId rank) const override;
  std::uint64_t sync_points(RankId rank) const override;

 private:
  struct PendingReceive {
    RankId at = 0;
    RankId from = 0;
    std::size_t capacity = 0;
  };

  int socket_for(RankId a, RankId b) const;
  void check_rank(RankId r, const char* what) const;

  const RankId world_size_;
  const std::chrono::milliseconds timeout_;
  // fds_[a][b]: fd rank a uses to talk with rank b.
  std::vector<std::vector<int>> fds_;

  mutable std::mutex mutex_;
  bool closed_ = false;
  std::uint64_t next_handle_ = 1;
  std::map<std::uint64_t, PendingReceive> receives_;
  // Frames arrive per pair in send order, which mirrors posting order; an
  // out-of-order wait buffers frames for earlier-posted handles here.
  std::map<std::pair<RankId, RankId>, std::deque<std::uint64_t>> receive_order_;
  std::map<std::uint64_t, std::vector<std::uint8_t>> arrived_;
  std::map<std::uint64_t, std::size_t> send_bytes_;
  std::vector<double> clocks_us_;
  std::vector<std::uint64_t> sync_counts_;
};

}  // namespace coalesce

#endif  // COALESCE_TCP_TRANSPORT_HPP
