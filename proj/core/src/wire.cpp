#include "coalesce/wire.hpp"

#include <algorithm>
#include <cstring>

namespace coalesce::wire {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }

  const std::uint8_t* bytes(std::size_t n) {
    need(n);
    const std::uint8_t* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::uint64_t raw(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n)
      throw DecodeError(DecodeFault::ShortRead,
                        "short read: need " + std::to_string(n) + " bytes, have " +
                            std::to_string(buf_.size() - pos_));
  }

  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

bool sorted_unique(const std::vector<SubMessage>& subs) {
  for (std::size_t i = 1; i < subs.size(); ++i) {
    auto a = std::pair{subs[i - 1].client_id, subs[i - 1].tag};
    auto b = std::pair{subs[i].client_id, subs[i].tag};
    if (!(a < b)) return false;
  }
  return true;
}

}  // namespace

std::size_t encoded_size(const Envelope& envelope) {
  std::size_t n = kHeaderSize;
  for (const auto& sub : envelope.sub_messages) n += kSubHeaderSize + sub.payload.size();
  return n;
}

std::vector<std::uint8_t> encode(const Envelope& envelope) {
  if (!sorted_unique(envelope.sub_messages))
    throw EncodeError("encode refused: sub-messages not sorted/unique by (client_id, tag)");
  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(envelope));
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u64(out, envelope.step_index);
  put_u32(out, static_cast<std::uint32_t>(envelope.sub_messages.size()));
  for (const auto& sub : envelope.sub_messages) {
    put_u32(out, sub.client_id);
    put_u32(out, sub.tag);
    put_u64(out, sub.payload.size());
    out.insert(out.end(), sub.payload.begin(), sub.payload.end());
  }
  return out;
}

Envelope decode(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const std::uint8_t* magic = r.bytes(4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DecodeError(DecodeFault::BadMagic, "bad magic: expected \"COAL\"");
  std::uint8_t version = *r.bytes(1);
  if (version != kVersion)
    throw DecodeError(DecodeFault::BadVersion,
                      "unknown wire version " + std::to_string(version));
  Envelope env;
  env.step_index = r.u64();
  std::uint32_t count = r.u32();
  env.sub_messages.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    SubMessage sub;
    sub.client_id = r.u32();
    sub.tag = r.u32();
    std::uint64_t len = r.u64();
    const std::uint8_t* p = r.bytes(len);
    sub.payload.assign(p, p + len);
    env.sub_messages.push_back(std::move(sub));
  }
  if (r.remaining() != 0)
    throw DecodeError(DecodeFault::TrailingGarbage,
                      std::to_string(r.remaining()) + " trailing bytes after envelope");
  if (!sorted_unique(env.sub_messages))
    throw DecodeError(DecodeFault::NonCanonical, "sub-messages not in canonical order");
  return env;
}

void canonicalize(std::vector<SubMessage>& subs) {
  std::sort(subs.begin(), subs.end(), [](const SubMessage& a, const SubMessage& b) {
    return std::pair{a.client_id, a.tag} < std::pair{b.client_id, b.tag};
  });
  for (std::size_t i = 1; i < subs.size(); ++i) {
    if (subs[i - 1].client_id == subs[i].client_id && subs[i - 1].tag == subs[i].tag)
      throw EncodeError("duplicate (client_id, tag) in envelope: client " +
                        std::to_string(subs[i].client_id) + " tag " +
                        std::to_string(subs[i].tag));
  }
}

}  // namespace coalesce::wire
