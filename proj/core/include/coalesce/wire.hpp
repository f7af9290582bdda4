#ifndef COALESCE_WIRE_HPP
#define COALESCE_WIRE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "coalesce/errors.hpp"

namespace coalesce::wire {

// Frame layout, version 0x01, all multi-byte fields little-endian:
//   magic "COAL" (4 B) | version (1 B) | step_index (8 B) | count (4 B)
//   then per sub-message: client_id (4 B) | tag (4 B) | length (8 B) | payload
// Encoded size = 17 + sum(16 + payload_len).

inline constexpr std::uint8_t kMagic[4] = {0x43, 0x4F, 0x41, 0x4C};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 17;
inline constexpr std::size_t kSubHeaderSize = 16;

struct SubMessage {
  std::uint32_t client_id = 0;
  std::uint32_t tag = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const SubMessage&, const SubMessage&) = default;
};

struct Envelope {
  std::uint64_t step_index = 0;
  // Must be sorted ascending by (client_id, tag), no duplicates.
  std::vector<SubMessage> sub_messages;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

enum class DecodeFault { BadMagic, BadVersion, ShortRead, TrailingGarbage, NonCanonical };

class DecodeError : public Error {
 public:
  DecodeError(DecodeFault fault, const std::string& what)
      : Error(what), fault_(fault) {}
  DecodeFault fault() const { return fault_; }

 private:
  DecodeFault fault_;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

/// Exact encoded size of an envelope.
std::size_t encoded_size(const Envelope& envelope);

/// Serialize; refuses envelopes whose sub-messages are unsorted or duplicated.
std::vector<std::uint8_t> encode(const Envelope& envelope);

/// Inverse of encode. Throws DecodeError with a distinct fault per
/// malformation class.
Envelope decode(const std::vector<std::uint8_t>& bytes);

/// Sorts by (client_id, tag) and verifies uniqueness.
void canonicalize(std::vector<SubMessage>& subs);

}  // namespace coalesce::wire

#endif  // COALESCE_WIRE_HPP
