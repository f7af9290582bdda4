#include "coalesce/tcp_transport.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>

namespace coalesce {
namespace {

void write_full(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    ssize_t n = ::write(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ShutdownError(std::string("socket write failed: ") + std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

bool read_full(int fd, std::uint8_t* data, std::size_t len,
               std::chrono::steady_clock::time_point deadline) {
  while (len > 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd pfd{fd, POLLIN, 0};
    int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw ShutdownError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (pr == 0) return false;
    ssize_t n = ::read(fd, data, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ShutdownError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw ShutdownError("peer closed connection");
    data += n;
    len -= static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

TcpTransport::TcpTransport(RankId world_size, std::chrono::milliseconds deadlock_timeout)
    : world_size_(world_size),
      timeout_(deadlock_timeout),
      fds_(world_size, std::vector<int>(world_size, -1)),
      clocks_us_(world_size, 0.0),
      sync_counts_(world_size, 0) {
  if (world_size < 1) throw ConfigError("world_size must be >= 1");

  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw ShutdownError("cannot create listener socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listener, 64) != 0) {
    ::close(listener);
    throw ShutdownError("cannot bind/listen on loopback");
  }
  socklen_t alen = sizeof(addr);
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &alen);

  for (RankId a = 0; a < world_size; ++a) {
    for (RankId b = a + 1; b < world_size; ++b) {
      int c = ::socket(AF_INET, SOCK_STREAM, 0);
      if (c < 0 || ::connect(c, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listener);
        throw ShutdownError("cannot connect loopback pair");
      }
      int s = ::accept(listener, nullptr, nullptr);
      if (s < 0) {
        ::close(listener);
        throw ShutdownError("accept failed");
      }
      int one = 1;
      ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::setsockopt(s, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      fds_[a][b] = c;
      fds_[b][a] = s;
    }
  }
  ::close(listener);
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::check_rank(RankId r, const char* what) const {
  if (r >= world_size_)
    throw ConfigError(std::string(what) + ": unknown rank " + std::to_string(r));
}

TransferHandle TcpTransport::post_send(RankId from, RankId to,
                                       std::span<const std::uint8_t> payload) {
  check_rank(from, "post_send");
  check_rank(to, "post_send");
  if (from == to) throw ConfigError("post_send: self-send not allowed");
  int fd;
  {
    std::lock_guard lock(mutex_);
    if (closed_) throw ShutdownError("post_send on closed transport");
    fd = fds_[from][to];
  }
  std::uint8_t header[8];
  std::uint64_t len = payload.size();
  for (int i = 0; i < 8; ++i) header[i] = static_cast<std::uint8_t>(len >> (8 * i));
  write_full(fd, header, 8);
  write_full(fd, payload.data(), payload.size());
  std::lock_guard lock(mutex_);
  TransferHandle h{next_handle_++, Direction::Send, to};
  send_bytes_[h.id] = payload.size();
  return h;
}

TransferHandle TcpTransport::post_receive(RankId at, RankId from, std::size_t capacity) {
  check_rank(at, "post_receive");
  check_rank(from, "post_receive");
  if (from == at) throw ConfigError("post_receive: self-receive not allowed");
  std::lock_guard lock(mutex_);
  if (closed_) throw ShutdownError("post_receive on closed transport");
  TransferHandle h{next_handle_++, Direction::Receive, from};
  receives_[h.id] = PendingReceive{at, from, capacity};
  receive_order_[{at, from}].push_back(h.id);
  return h;
}

WaitResult TcpTransport::wait_all(RankId rank, std::span<const TransferHandle> handles) {
  check_rank(rank, "wait_all");
  const auto t0 = std::chrono::steady_clock::now();
  const auto deadline = t0 + timeout_;
  WaitResult result;

  // Receives from the same peer must be drained in posting order; handle
  // ids increase with posting.
  std::vector<TransferHandle> ordered(handles.begin(), handles.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const TransferHandle& a, const TransferHandle& b) {
                     return a.id < b.id;
                   });

  for (const TransferHandle& h : ordered) {
    if (h.direction == Direction::Send) {
      std::lock_guard lock(mutex_);
      auto it = send_bytes_.find(h.id);
      if (it == send_bytes_.end())
        throw ConfigError("wait_all: unknown send handle " + std::to_string(h.id));
      result.completed.push_back({h.id, Direction::Send, h.peer, {}, it->second});
      send_bytes_.erase(it);
      continue;
    }
    PendingReceive pending;
    int fd;
    {
      std::lock_guard lock(mutex_);
      auto it = receives_.find(h.id);
      if (it == receives_.end())
        throw ConfigError("wait_all: unknown receive handle " + std::to_string(h.id));
      pending = it->second;
      if (pending.at != rank)
        throw ConfigError("wait_all: handle belongs to rank " + std::to_string(pending.at));
      fd = fds_[rank][pending.from];
    }
    // Frames on the pair's socket arrive in the peer's posting order, which
    // mirrors this rank's receive posting order. Each frame read belongs to
    // the earliest still-outstanding receive for the pair; buffer it until
    // the handle currently waited on is served.
    std::vector<std::uint8_t> payload;
    for (;;) {
      {
        std::lock_guard lock(mutex_);
        auto hit = arrived_.find(h.id);
        if (hit != arrived_.end()) {
          payload = std::move(hit->second);
          arrived_.erase(hit);
          receives_.erase(h.id);
          break;
        }
      }
      std::uint8_t header[8];
      if (!read_full(fd, header, 8, deadline))
        throw DeadlockError("deadlock: rank " + std::to_string(rank) +
                            " timed out waiting for message from rank " +
                            std::to_string(pending.from));
      std::uint64_t len = 0;
      for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(header[i]) << (8 * i);
      std::vector<std::uint8_t> frame(len);
      if (len > 0 && !read_full(fd, frame.data(), len, deadline))
        throw DeadlockError("deadlock: rank " + std::to_string(rank) +
                            " timed out mid-message from rank " +
                            std::to_string(pending.from));
      std::lock_guard lock(mutex_);
      auto& order = receive_order_[{rank, pending.from}];
      if (order.empty())
        throw ConfigError("unexpected message from rank " + std::to_string(pending.from) +
                          ": no receive posted");
      const std::uint64_t owner = order.front();
      order.pop_front();
      const PendingReceive& owner_pending = receives_.at(owner);
      if (frame.size() > owner_pending.capacity)
        throw TruncationError("receive from rank " + std::to_string(pending.from) +
                              ": " + std::to_string(frame.size()) +
                              " bytes exceeds capacity " +
                              std::to_string(owner_pending.capacity));
      arrived_[owner] = std::move(frame);
    }
    std::size_t bytes = payload.size();
    result.completed.push_back({h.id, Direction::Receive, h.peer, std::move(payload), bytes});
  }

  const auto t1 = std::chrono::steady_clock::now();
  result.cost_us =
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count() / 1000.0;
  std::lock_guard lock(mutex_);
  clocks_us_[rank] += result.cost_us;
  sync_counts_[rank] += 1;
  return result;
}

void TcpTransport::close() {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  closed_ = true;
  for (auto& row : fds_)
    for (int& fd : row)
      if (fd >= 0) {
        ::close(fd);
        fd = -1;
      }
}

double TcpTransport::clock_us(RankId rank) const {
  check_rank(rank, "clock_us");
  std::lock_guard lock(mutex_);
  return clocks_us_[rank];
}

std::uint64_t TcpTransport::sync_points(RankId rank) const {
  check_rank(rank, "sync_points");
  std::lock_guard lock(mutex_);
  return sync_counts_[rank];
}

}  // namespace coalesce
