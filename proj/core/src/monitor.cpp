#include "coalesce/monitor.hpp"

#include <cstring>

namespace coalesce::monitor {
namespace {

std::vector<std::uint8_t> pack_scalar(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  std::vector<std::uint8_t> out(8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(bits >> (8 * i));
  return out;
}

double unpack_scalar(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != 8) throw HaloFormatError("monitor scalar must be 8 bytes");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

double monitor_reduce(std::span<const double> per_rank) {
  double total = 0.0;
  for (double v : per_rank) total += v;
  return total;
}

MonitorClient::MonitorClient(const lbm::LatticeSlab& slab, RankId rank,
                             RankId world_size, StepFilter filter)
    : slab_(slab), rank_(rank), world_(world_size), filter_(filter) {}

ClientSpec MonitorClient::spec() {
  ClientSpec spec;
  spec.name = "monitor";

  spec.registrations.push_back(
      {Phase::RequestPosting, filter_, -5, 1.0, [this](StepContext& ctx) {
         local_ = slab_.mass();
         if (rank_ != 0) {
           ctx.comms.request_send(ctx.client_id, 0, kTagScalar, pack_scalar(local_));
           return;
         }
         tickets_.clear();
         for (RankId r = 1; r < world_; ++r)
           tickets_[r] = ctx.comms.request_receive(ctx.client_id, r, kTagScalar, 8);
       }});

  spec.registrations.push_back(
      {Phase::PostWait, filter_, -5, 1.0, [this](StepContext&) {
         if (rank_ != 0) return;
         std::vector<double> scalars;
         scalars.push_back(local_);
         for (auto& [r, ticket] : tickets_) scalars.push_back(unpack_scalar(ticket->read()));
         log_.push_back(monitor_reduce(scalars));
       }});
  return spec;
}

}  // namespace coalesce::monitor
