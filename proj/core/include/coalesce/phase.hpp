#ifndef COALESCE_PHASE_HPP
#define COALESCE_PHASE_HPP

#include <array>
#include <string_view>

namespace coalesce {

/// Fixed per-step phase sequence. ReceivePost, SendPost and Wait are
/// framework phases; the rest run client callbacks.
enum class Phase {
  RequestPosting,
  PreReceive,
  ReceivePost,
  PreSend,
  SendPost,
  PreWait,
  Wait,
  PostWait,
  EndStep,
};

inline constexpr std::array<Phase, 9> kPhaseOrder = {
    Phase::RequestPosting, Phase::PreReceive, Phase::ReceivePost,
    Phase::PreSend,        Phase::SendPost,   Phase::PreWait,
    Phase::Wait,           Phase::PostWait,   Phase::EndStep,
};

constexpr bool is_framework_phase(Phase p) {
  return p == Phase::ReceivePost || p == Phase::SendPost || p == Phase::Wait;
}

constexpr std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::RequestPosting: return "RequestPosting";
    case Phase::PreReceive: return "PreReceive";
    case Phase::ReceivePost: return "ReceivePost";
    case Phase::PreSend: return "PreSend";
    case Phase::SendPost: return "SendPost";
    case Phase::PreWait: return "PreWait";
    case Phase::Wait: return "Wait";
    case Phase::PostWait: return "PostWait";
    case Phase::EndStep: return "EndStep";
  }
  return "?";
}

}  // namespace coalesce

#endif  // COALESCE_PHASE_HPP
