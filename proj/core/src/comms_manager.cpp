#include "coalesce/comms_manager.hpp"

#include <algorithm>

namespace coalesce {

CoalescePlan coalesce(const std::vector<CommRequest>& requests, std::uint64_t step_index) {
  CoalescePlan plan;
  for (const CommRequest& req : requests) {
    if (req.direction == Direction::Send) {
      auto& env = plan.send_envelopes[req.peer];
      env.step_index = step_index;
      env.sub_messages.push_back({req.client_id, req.tag, req.payload});
    } else {
      plan.expected_receives[req.peer].emplace_back(req.client_id, req.tag, req.capacity);
    }
  }
  for (auto& [peer, env] : plan.send_envelopes) wire::canonicalize(env.sub_messages);
  for (auto& [peer, expected] : plan.expected_receives)
    std::sort(expected.begin(), expected.end());
  return plan;
}

CommsManager::CommsManager(Transport& transport, RankId self)
    : transport_(transport), self_(self) {
  if (self >= transport.world_size())
    throw ConfigError("CommsManager: rank " + std::to_string(self) + " out of range");
}

void CommsManager::begin_step(std::uint64_t step_index) {
  step_index_ = step_index;
  phase_ = Phase::RequestPosting;
  posted_mode_.reset();
  requests_.clear();
  tickets_.clear();
  send_handles_.clear();
  receive_handles_.clear();
  direct_groups_.clear();
  receive_peer_by_handle_.clear();
  messages_sent_ = 0;
  bytes_on_wire_ = 0;
}

void CommsManager::require_phase(Phase expected, const char* what) const {
  if (phase_ != expected)
    throw PhaseViolationError(std::string(what) + " called during phase " +
                              std::string(phase_name(phase_)) + ", allowed only in " +
                              std::string(phase_name(expected)));
}

void CommsManager::request_send(std::uint32_t client_id, RankId peer, std::uint32_t tag,
                                std::vector<std::uint8_t> payload) {
  require_phase(Phase::RequestPosting, "request_send");
  for (const CommRequest& req : requests_) {
    if (req.direction == Direction::Send && req.client_id == client_id &&
        req.peer == peer && req.tag == tag)
      throw DuplicateRequestError("duplicate send request: client " +
                                  std::to_string(client_id) + ", tag " +
                                  std::to_string(tag) + ", peer " + std::to_string(peer));
  }
  CommRequest req;
  req.client_id = client_id;
  req.direction = Direction::Send;
  req.peer = peer;
  req.tag = tag;
  req.payload = std::move(payload);
  requests_.push_back(std::move(req));
}

std::shared_ptr<BufferTicket> CommsManager::request_receive(std::uint32_t client_id,
                                                            RankId peer, std::uint32_t tag,
                                                            std::size_t capacity) {
  require_phase(Phase::RequestPosting, "request_receive");
  if (capacity == 0) throw ConfigError("request_receive: capacity must be > 0");
  TicketKey key{peer, client_id, tag};
  if (tickets_.contains(key))
    throw DuplicateRequestError("duplicate receive request: client " +
                                std::to_string(client_id) + ", tag " + std::to_string(tag) +
                                ", peer " + std::to_string(peer));
  auto ticket = std::make_shared<BufferTicket>();
  ticket->client_id_ = client_id;
  ticket->tag_ = tag;
  ticket->capacity_ = capacity;
  tickets_[key] = ticket;
  CommRequest req;
  req.client_id = client_id;
  req.direction = Direction::Receive;
  req.peer = peer;
  req.tag = tag;
  req.capacity = capacity;
  requests_.push_back(std::move(req));
  return ticket;
}

void CommsManager::post_receives(Mode mode) {
  posted_mode_ = mode;
  if (mode == Mode::Coalesced) {
    CoalescePlan plan = coalesce(requests_, step_index_);
    for (const auto& [peer, expected] : plan.expected_receives) {
      std::size_t capacity = wire::kHeaderSize;
      for (const auto& [client, tag, cap] : expected)
        capacity += wire::kSubHeaderSize + cap;
      TransferHandle h = transport_.post_receive(self_, peer, capacity);
      receive_handles_.push_back(h);
      receive_peer_by_handle_[h.id] = peer;
    }
    return;
  }
  for (const CommRequest& req : requests_) {
    if (req.direction != Direction::Receive) continue;
    std::size_t capacity = wire::kHeaderSize + wire::kSubHeaderSize + req.capacity;
    TransferHandle h = transport_.post_receive(self_, req.peer, capacity);
    receive_handles_.push_back(h);
    receive_peer_by_handle_[h.id] = req.peer;
    direct_groups_[req.client_id].push_back(h);
  }
}

void CommsManager::post_sends(Mode mode) {
  if (!posted_mode_ || *posted_mode_ != mode)
    throw PhaseViolationError("post_sends: receives were not posted first in mode " +
                              std::string(mode_name(mode)));
  if (mode == Mode::Coalesced) {
    CoalescePlan plan = coalesce(requests_, step_index_);
    for (const auto& [peer, env] : plan.send_envelopes) {
      std::vector<std::uint8_t> bytes = wire::encode(env);
      bytes_on_wire_ += bytes.size();
      ++messages_sent_;
      send_handles_.push_back(transport_.post_send(self_, peer, bytes));
    }
    return;
  }
  for (const CommRequest& req : requests_) {
    if (req.direction != Direction::Send) continue;
    wire::Envelope env;
    env.step_index = step_index_;
    env.sub_messages.push_back({req.client_id, req.tag, req.payload});
    std::vector<std::uint8_t> bytes = wire::encode(env);
    bytes_on_wire_ += bytes.size();
    ++messages_sent_;
    TransferHandle h = transport_.post_send(self_, req.peer, bytes);
    send_handles_.push_back(h);
    direct_groups_[req.client_id].push_back(h);
  }
}

bool CommsManager::has_posted_transfers() const {
  return !send_handles_.empty() || !receive_handles_.empty();
}

void CommsManager::route_envelope(RankId peer, const std::vector<std::uint8_t>& bytes,
                                  DeliveryReport& report) {
  wire::Envelope env = wire::decode(bytes);
  if (env.step_index != step_index_)
    throw RoutingError("envelope from rank " + std::to_string(peer) + " is for step " +
                       std::to_string(env.step_index) + ", current step is " +
                       std::to_string(step_index_));
  for (const wire::SubMessage& sub : env.sub_messages) {
    auto it = tickets_.find(TicketKey{peer, sub.client_id, sub.tag});
    if (it == tickets_.end())
      throw RoutingError("unroutable sub-message from rank " + std::to_string(peer) +
                         ": no ticket for (client " + std::to_string(sub.client_id) +
                         ", tag " + std::to_string(sub.tag) + ")");
    BufferTicket& ticket = *it->second;
    if (sub.payload.size() > ticket.capacity_)
      throw TruncationError("sub-message (client " + std::to_string(sub.client_id) +
                            ", tag " + std::to_string(sub.tag) + ") of " +
                            std::to_string(sub.payload.size()) + " bytes exceeds ticket capacity " +
                            std::to_string(ticket.capacity_));
    ticket.data_ = sub.payload;
    ticket.ready_ = true;
    report.received_bytes_per_client[sub.client_id] += sub.payload.size();
  }
}

DeliveryReport CommsManager::complete() {
  DeliveryReport report;
  report.messages_sent = messages_sent_;
  report.bytes_on_wire = bytes_on_wire_;
  if (!posted_mode_) throw PhaseViolationError("complete: nothing posted this step");

  if (*posted_mode_ == Mode::Coalesced) {
    if (!has_posted_transfers()) return report;  // zero-request step: no sync point
    std::vector<TransferHandle> all = receive_handles_;
    all.insert(all.end(), send_handles_.begin(), send_handles_.end());
    WaitResult wr = transport_.wait_all(self_, all);
    report.sync_points_used = 1;
    report.comm_cost_us = wr.cost_us;
    for (const CompletedTransfer& ct : wr.completed) {
      if (ct.direction != Direction::Receive) continue;
      route_envelope(receive_peer_by_handle_.at(ct.handle_id), ct.payload, report);
    }
    return report;
  }

  for (const auto& [client_id, handles] : direct_groups_) {
    WaitResult wr = transport_.wait_all(self_, handles);
    report.sync_points_used += 1;
    report.comm_cost_us += wr.cost_us;
    for (const CompletedTransfer& ct : wr.completed) {
      if (ct.direction != Direction::Receive) continue;
      route_envelope(receive_peer_by_handle_.at(ct.handle_id), ct.payload, report);
    }
  }
  return report;
}

}  // namespace coalesce
