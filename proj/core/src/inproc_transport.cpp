#include "coalesce/inproc_transport.hpp"

#include <sstream>

namespace coalesce {

InprocTransport::InprocTransport(RankId world_size, CostModelParams cost,
                                 std::chrono::milliseconds deadlock_timeout)
    : world_size_(world_size),
      cost_(cost),
      timeout_(deadlock_timeout),
      clocks_us_(world_size, 0.0),
      sync_counts_(world_size, 0) {
  if (world_size < 1) throw ConfigError("world_size must be >= 1");
  if (cost.alpha_us < 0 || cost.beta_us_per_byte < 0 || cost.sync_us < 0)
    throw ConfigError("cost model parameters must be >= 0");
}

void InprocTransport::check_rank(RankId r, const char* what) const {
  if (r >= world_size_)
    throw ConfigError(std::string(what) + ": unknown rank " + std::to_string(r) +
                      " (world size " + std::to_string(world_size_) + ")");
}

TransferHandle InprocTransport::post_send(RankId from, RankId to,
                                          std::span<const std::uint8_t> payload) {
  check_rank(from, "post_send");
  check_rank(to, "post_send");
  if (from == to) throw ConfigError("post_send: self-send not allowed (rank " +
                                    std::to_string(from) + ")");
  std::lock_guard lock(mutex_);
  if (closed_) throw ShutdownError("post_send on closed transport");
  PairKey key{from, to};
  std::uint64_t seq = send_seq_[key]++;
  inflight_[key].emplace(seq, std::vector<std::uint8_t>(payload.begin(), payload.end()));
  TransferHandle h{next_handle_++, Direction::Send, to};
  send_bytes_[h.id] = payload.size();
  arrived_.notify_all();
  return h;
}

TransferHandle InprocTransport::post_receive(RankId at, RankId from, std::size_t capacity) {
  check_rank(at, "post_receive");
  check_rank(from, "post_receive");
  if (from == at) throw ConfigError("post_receive: self-receive not allowed");
  std::lock_guard lock(mutex_);
  if (closed_) throw ShutdownError("post_receive on closed transport");
  PairKey key{from, at};
  TransferHandle h{next_handle_++, Direction::Receive, from};
  receives_[h.id] = PendingReceive{at, from, capacity, recv_seq_[key]++};
  return h;
}

WaitResult InprocTransport::wait_all(RankId rank, std::span<const TransferHandle> handles) {
  check_rank(rank, "wait_all");
  WaitResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;

  std::unique_lock lock(mutex_);
  if (closed_) throw ShutdownError("wait_all on closed transport");

  double cost = cost_.sync_us;
  for (const TransferHandle& h : handles) {
    if (h.direction == Direction::Send) {
      auto it = send_bytes_.find(h.id);
      if (it == send_bytes_.end())
        throw ConfigError("wait_all: unknown or already-completed send handle " +
                          std::to_string(h.id));
      std::size_t bytes = it->second;
      send_bytes_.erase(it);
      cost += cost_.alpha_us + cost_.beta_us_per_byte * static_cast<double>(bytes);
      result.completed.push_back({h.id, Direction::Send, h.peer, {}, bytes});
      continue;
    }
    auto it = receives_.find(h.id);
    if (it == receives_.end())
      throw ConfigError("wait_all: unknown or already-completed receive handle " +
                        std::to_string(h.id));
    PendingReceive pending = it->second;
    if (pending.at != rank)
      throw ConfigError("wait_all: handle " + std::to_string(h.id) +
                        " belongs to rank " + std::to_string(pending.at));
    PairKey key{pending.from, pending.at};
    bool ok = arrived_.wait_until(lock, deadline, [&] {
      if (closed_) return true;
      auto qit = inflight_.find(key);
      return qit != inflight_.end() && qit->second.contains(pending.seq);
    });
    if (closed_) throw ShutdownError("transport closed during wait_all");
    if (!ok) {
      std::ostringstream oss;
      oss << "deadlock: rank " << rank << " timed out after " << timeout_.count()
          << " ms; unmatched receive from rank " << pending.from << " (pair seq "
          << pending.seq << ")";
      // List any further unmatched handles for the diagnosis.
      for (const TransferHandle& rest : handles) {
        if (rest.id == h.id || rest.direction != Direction::Receive) continue;
        auto rit = receives_.find(rest.id);
        if (rit == receives_.end()) continue;
        PairKey rkey{rit->second.from, rit->second.at};
        auto qit = inflight_.find(rkey);
        if (qit == inflight_.end() || !qit->second.contains(rit->second.seq))
          oss << "; unmatched receive from rank " << rit->second.from;
      }
      throw DeadlockError(oss.str());
    }
    auto& queue = inflight_[key];
    auto mit = queue.find(pending.seq);
    std::vector<std::uint8_t> payload = std::move(mit->second);
    queue.erase(mit);
    receives_.erase(h.id);
    if (payload.size() > pending.capacity)
      throw TruncationError("receive from rank " + std::to_string(pending.from) +
                            ": message of " + std::to_string(payload.size()) +
                            " bytes exceeds capacity " + std::to_string(pending.capacity));
    cost += cost_.alpha_us + cost_.beta_us_per_byte * static_cast<double>(payload.size());
    std::size_t bytes = payload.size();
    result.completed.push_back({h.id, Direction::Receive, h.peer, std::move(payload), bytes});
  }

  clocks_us_[rank] += cost;
  sync_counts_[rank] += 1;
  result.cost_us = cost;
  return result;
}

void InprocTransport::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  arrived_.notify_all();
}

double InprocTransport::clock_us(RankId rank) const {
  check_rank(rank, "clock_us");
  std::lock_guard lock(mutex_);
  return clocks_us_[rank];
}

std::uint64_t InprocTransport::sync_points(RankId rank) const {
  check_rank(rank, "sync_points");
  std::lock_guard lock(mutex_);
  return sync_counts_[rank];
}

std::size_t InprocTransport::undelivered_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, queue] : inflight_) n += queue.size();
  return n;
}

}  // namespace coalesce
