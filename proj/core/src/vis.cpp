#include "coalesce/vis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace coalesce::vis {
namespace {

std::vector<std::uint8_t> pack_columns(const std::vector<double>& columns) {
  std::vector<std::uint8_t> out;
  out.reserve(columns.size() * 8);
  for (double v : columns) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

std::vector<double> unpack_columns(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 8 != 0)
    throw CompositingError("partial image payload not a multiple of 8 bytes");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

}  // namespace

PartialImage render_local(const lbm::LatticeSlab& slab, RankId rank,
                          std::uint64_t step_index) {
  return PartialImage{rank, step_index, slab.column_max_density()};
}

std::vector<double> composite(const std::vector<PartialImage>& partials) {
  if (partials.empty()) throw CompositingError("composite: no partials");
  std::vector<double> out = partials.front().columns;
  for (std::size_t i = 1; i < partials.size(); ++i) {
    const PartialImage& p = partials[i];
    if (p.step_index != partials.front().step_index)
      throw CompositingError("composite: partial from rank " + std::to_string(p.rank) +
                             " is for a different step");
    if (p.columns.size() != out.size())
      throw CompositingError("composite: width mismatch from rank " +
                             std::to_string(p.rank));
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = std::max(out[c], p.columns[c]);
  }
  return out;
}

void write_pgm(const std::string& path, const std::vector<double>& columns) {
  double maxv = 0.0;
  for (double v : columns) maxv = std::max(maxv, v);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open image file " + path);
  os << "P5\n" << columns.size() << " 1\n65535\n";
  for (double v : columns) {
    const double norm = maxv > 0.0 ? v / maxv : 0.0;
    const auto px = static_cast<std::uint16_t>(std::lround(norm * 65535.0));
    os.put(static_cast<char>(px >> 8));  // PGM 16-bit is big-endian
    os.put(static_cast<char>(px & 0xff));
  }
}

VisClient::VisClient(const lbm::LatticeSlab& slab, RankId rank, RankId world_size,
                     StepFilter image_filter, std::string output_dir)
    : slab_(slab), rank_(rank), world_(world_size), filter_(image_filter),
      output_dir_(std::move(output_dir)) {}

ClientSpec VisClient::spec() {
  const double render_cost_per_site_us = 0.05;
  const double composite_cost_per_value_us = 0.02;
  const double render_cost =
      render_cost_per_site_us * static_cast<double>(slab_.nx() * slab_.ny_local());
  const double composite_cost =
      rank_ == 0 ? composite_cost_per_value_us *
                       static_cast<double>(slab_.nx() * world_)
                 : 0.0;

  ClientSpec spec;
  spec.name = "vis";
  spec.is_visualization = true;

  spec.registrations.push_back(
      {Phase::RequestPosting, filter_, -10, render_cost, [this](StepContext& ctx) {
         own_partial_ = render_local(slab_, rank_, ctx.step_index);
         if (rank_ != 0) {
           ctx.comms.request_send(ctx.client_id, 0, kTagPartial,
                                  pack_columns(own_partial_.columns));
           return;
         }
         tickets_.clear();
         for (RankId r = 1; r < world_; ++r)
           tickets_[r] = ctx.comms.request_receive(ctx.client_id, r, kTagPartial,
                                                   slab_.nx() * 8);
       }});

  spec.registrations.push_back(
      {Phase::PostWait, filter_, -10, composite_cost, [this](StepContext& ctx) {
         if (rank_ != 0) return;
         std::vector<PartialImage> partials;
         partials.push_back(own_partial_);
         for (RankId r = 1; r < world_; ++r) {
           auto it = tickets_.find(r);
           if (it == tickets_.end() || !it->second->ready())
             throw CompositingError("missing partial image from rank " +
                                    std::to_string(r) + " at step " +
                                    std::to_string(ctx.step_index));
           partials.push_back(
               PartialImage{r, ctx.step_index, unpack_columns(it->second->read())});
         }
         std::vector<double> image = composite(partials);
         if (!output_dir_.empty())
           write_pgm(output_dir_ + "/img_" + std::to_string(ctx.step_index) + ".pgm",
                     image);
         steps_rendered_.push_back(ctx.step_index);
         images_.push_back(std::move(image));
       }});
  return spec;
}

void VisClient::flush_manifest() const {
  if (rank_ != 0 || output_dir_.empty()) return;
  std::ofstream os(output_dir_ + "/manifest.txt");
  for (std::uint64_t step : steps_rendered_) os << step << "\n";
}

}  // namespace coalesce::vis
