#ifndef COALESCE_COMMS_MANAGER_HPP
#define COALESCE_COMMS_MANAGER_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "coalesce/phase.hpp"
#include "coalesce/transport.hpp"
#include "coalesce/wire.hpp"

namespace coalesce {

enum class Mode { Coalesced, Direct };

constexpr std::string_view mode_name(Mode m) {
  return m == Mode::Coalesced ? "coalesced" : "direct";
}

/// One client's declared send or receive need for the current step.
struct CommRequest {
  std::uint32_t client_id = 0;
  Direction direction = Direction::Send;
  RankId peer = 0;
  std::uint32_t tag = 0;
  std::vector<std::uint8_t> payload;  // sends
  std::size_t capacity = 0;           // receives
};

/// Registered receive buffer; readable only after the step's Wait.
class BufferTicket {
 public:
  const std::vector<std::uint8_t>& read() const {
    if (!ready_)
      throw BufferNotReadyError("ticket (client " + std::to_string(client_id_) +
                                ", tag " + std::to_string(tag_) +
                                ") read before Wait completed");
    return data_;
  }
  bool ready() const { return ready_; }
  std::size_t capacity() const { return capacity_; }

 private:
  friend class CommsManager;
  std::uint32_t client_id_ = 0;
  std::uint32_t tag_ = 0;
  std::size_t capacity_ = 0;
  bool ready_ = false;
  std::vector<std::uint8_t> data_;
};

struct PostedBatch {
  Mode mode = Mode::Coalesced;
  std::vector<TransferHandle> send_handles;
  std::vector<TransferHandle> receive_handles;
};

struct DeliveryReport {
  std::uint64_t sync_points_used = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_on_wire = 0;  // sent by this rank, envelope framing included
  double comm_cost_us = 0.0;
  std::map<std::uint32_t, std::uint64_t> received_bytes_per_client;
};

/// Deterministic per-peer grouping of one step's requests.
struct CoalescePlan {
  // Destination peer -> envelope of this rank's sends.
  std::map<RankId, wire::Envelope> send_envelopes;
  // Source peer -> expected (client_id, tag, capacity), canonically ordered.
  std::map<RankId, std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>>>
      expected_receives;
};

CoalescePlan coalesce(const std::vector<CommRequest>& requests, std::uint64_t step_index);

/// Per-rank communications manager: collects one step's requests, posts the
/// transfers coalesced (one envelope per peer, one wait) or direct (one
/// message per request, one wait per client), and routes arrivals to tickets.
class CommsManager {
 public:
  CommsManager(Transport& transport, RankId self);

  RankId self() const { return self_; }

  void begin_step(std::uint64_t step_index);
  void set_phase(Phase phase) { phase_ = phase; }
  Phase phase() const { return phase_; }

  void request_send(std::uint32_t client_id, RankId peer, std::uint32_t tag,
                    std::vector<std::uint8_t> payload);
  std::shared_ptr<BufferTicket> request_receive(std::uint32_t client_id, RankId peer,
                                                std::uint32_t tag, std::size_t capacity);

  void post_receives(Mode mode);
  void post_sends(Mode mode);

  /// The Wait: coalesced = one wait_all over everything; direct = one
  /// wait_all per client's request group. Marks tickets readable.
  DeliveryReport complete();

  bool has_posted_transfers() const;

 private:
  struct TicketKey {
    RankId peer;
    std::uint32_t client_id;
    std::uint32_t tag;
    auto operator<=>(const TicketKey&) const = default;
  };

  void require_phase(Phase expected, const char* what) const;
  void route_envelope(RankId peer, const std::vector<std::uint8_t>& bytes,
                      DeliveryReport& report);

  Transport& transport_;
  const RankId self_;

  Phase phase_ = Phase::EndStep;
  std::uint64_t step_index_ = 0;
  std::optional<Mode> posted_mode_;
  std::vector<CommRequest> requests_;
  std::map<TicketKey, std::shared_ptr<BufferTicket>> tickets_;
  std::vector<TransferHandle> send_handles_;
  std::vector<TransferHandle> receive_handles_;
  // Direct mode: handles grouped per client, ascending client id.
  std::map<std::uint32_t, std::vector<TransferHandle>> direct_groups_;
  std::map<std::uint64_t, RankId> receive_peer_by_handle_;
  std::uint64_t messages_sent_ = 0;
  std::uint64_t bytes_on_wire_ = 0;
};

}  // namespace coalesce

#endif  // COALESCE_COMMS_MANAGER_HPP
