#ifndef COALESCE_STEP_MANAGER_HPP
#define COALESCE_STEP_MANAGER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "coalesce/comms_manager.hpp"
#include "coalesce/phase.hpp"

namespace coalesce {

/// Which steps a callback fires on: every k-th step with an offset.
struct StepFilter {
  std::uint64_t every = 1;
  std::uint64_t offset = 0;

  bool matches(std::uint64_t step) const { return step % every == offset % every; }

  static StepFilter every_step() { return {1, 0}; }
};

struct StepContext {
  std::uint64_t step_index = 0;
  Phase phase = Phase::RequestPosting;
  std::uint32_t client_id = 0;
  CommsManager& comms;
};

using Action = std::function<void(StepContext&)>;

struct ActionRegistration {
  Phase phase = Phase::PreWait;
  StepFilter filter = StepFilter::every_step();
  int priority = 0;
  double declared_cost_us = 0.0;
  Action action;
};

struct ClientSpec {
  std::string name;
  bool is_visualization = false;
  std::vector<ActionRegistration> registrations;
};

struct StepReport {
  std::uint64_t step_index = 0;
  std::map<Phase, double> phase_time_us;
  DeliveryReport delivery;
  std::map<std::uint32_t, std::uint64_t> callbacks_per_client;
  double total_us() const {
    double t = 0;
    for (const auto& [p, us] : phase_time_us) t += us;
    return t;
  }
};

struct RunReport {
  std::uint64_t steps_run = 0;
  double total_us = 0.0;
  double comm_us = 0.0;     // posting + wait
  double compute_us = 0.0;  // declared callback cost, non-visualization clients
  double vis_us = 0.0;      // declared callback cost, visualization clients
  std::uint64_t sync_points = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_on_wire = 0;
  std::vector<StepReport> step_reports;
};

/// Receives `step=<n> phase=<name> client=<id> event=<callback|post|wait>`
/// lines; client is "-" for framework events.
using TraceSink = std::function<void(const std::string&)>;

/// Per-rank client registry and phase orchestrator. Runs the fixed phase
/// sequence each step; within a callback phase, actions run ordered by
/// (priority, client_id).
class StepManager {
 public:
  StepManager(CommsManager& comms, Mode mode);

  std::uint32_t register_client(ClientSpec spec);
  void set_trace_sink(TraceSink sink) { trace_ = std::move(sink); }
  void set_overlap_credit(bool enabled) { overlap_credit_ = enabled; }

  StepReport run_step(std::uint64_t step_index);
  RunReport run(std::uint64_t n_steps);

  Mode mode() const { return mode_; }

 private:
  struct Slot {
    std::uint32_t client_id;
    int priority;
    ActionRegistration reg;
  };

  double run_callback_phase(Phase phase, std::uint64_t step, StepReport& report);
  void trace(std::uint64_t step, Phase phase, const std::string& client,
             const char* event);

  CommsManager& comms_;
  const Mode mode_;
  bool started_ = false;
  bool overlap_credit_ = false;
  std::vector<ClientSpec> clients_;
  std::map<Phase, std::vector<Slot>> slots_;
  TraceSink trace_;
};

}  // namespace coalesce

#endif  // COALESCE_STEP_MANAGER_HPP
