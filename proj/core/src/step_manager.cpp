#include "coalesce/step_manager.hpp"

#include <algorithm>

namespace coalesce {

StepManager::StepManager(CommsManager& comms, Mode mode) : comms_(comms), mode_(mode) {}

std::uint32_t StepManager::register_client(ClientSpec spec) {
  if (started_)
    throw RegistrationError("register_client after run() started");
  const auto client_id = static_cast<std::uint32_t>(clients_.size());
  for (const ActionRegistration& reg : spec.registrations) {
    if (is_framework_phase(reg.phase))
      throw RegistrationError("client \"" + spec.name + "\": cannot register for framework phase " +
                              std::string(phase_name(reg.phase)));
    if (reg.filter.every < 1)
      throw RegistrationError("client \"" + spec.name + "\": step filter k must be >= 1");
    if (!reg.action)
      throw RegistrationError("client \"" + spec.name + "\": empty action");
    auto& phase_slots = slots_[reg.phase];
    for (const Slot& s : phase_slots) {
      if (s.client_id == client_id && s.priority == reg.priority)
        throw RegistrationError("client \"" + spec.name + "\": duplicate (phase " +
                                std::string(phase_name(reg.phase)) + ", priority " +
                                std::to_string(reg.priority) + ")");
    }
    phase_slots.push_back({client_id, reg.priority, reg});
  }
  clients_.push_back(std::move(spec));
  return client_id;
}

void StepManager::trace(std::uint64_t step, Phase phase, const std::string& client,
                        const char* event) {
  if (!trace_) return;
  trace_("step=" + std::to_string(step) + " phase=" + std::string(phase_name(phase)) +
         " client=" + client + " event=" + event);
}

double StepManager::run_callback_phase(Phase phase, std::uint64_t step,
                                       StepReport& report) {
  auto it = slots_.find(phase);
  double cost = 0.0;
  if (it == slots_.end()) return cost;
  std::vector<Slot*> order;
  for (Slot& s : it->second) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const Slot* a, const Slot* b) {
    return std::pair{a->priority, a->client_id} < std::pair{b->priority, b->client_id};
  });
  for (Slot* s : order) {
    if (!s->reg.filter.matches(step)) continue;
    trace(step, phase, std::to_string(s->client_id), "callback");
    StepContext ctx{step, phase, s->client_id, comms_};
    try {
      s->reg.action(ctx);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error("callback failed at step " + std::to_string(step) + ", phase " +
                  std::string(phase_name(phase)) + ", client " +
                  std::to_string(s->client_id) + " (\"" + clients_[s->client_id].name +
                  "\"): " + e.what());
    }
    cost += s->reg.declared_cost_us;
    report.callbacks_per_client[s->client_id] += 1;
  }
  return cost;
}

StepReport StepManager::run_step(std::uint64_t step_index) {
  started_ = true;
  StepReport report;
  report.step_index = step_index;

  auto callback_phase = [&](Phase p) {
    comms_.set_phase(p);
    double cost = run_callback_phase(p, step_index, report);
    report.phase_time_us[p] += cost;
  };

  comms_.begin_step(step_index);
  callback_phase(Phase::RequestPosting);

  callback_phase(Phase::PreReceive);

  comms_.set_phase(Phase::ReceivePost);
  comms_.post_receives(mode_);
  trace(step_index, Phase::ReceivePost, "-", "post");

  callback_phase(Phase::PreSend);

  comms_.set_phase(Phase::SendPost);
  comms_.post_sends(mode_);
  trace(step_index, Phase::SendPost, "-", "post");

  callback_phase(Phase::PreWait);

  comms_.set_phase(Phase::Wait);
  report.delivery = comms_.complete();
  if (report.delivery.sync_points_used > 0) trace(step_index, Phase::Wait, "-", "wait");
  report.phase_time_us[Phase::Wait] += report.delivery.comm_cost_us;

  callback_phase(Phase::PostWait);
  callback_phase(Phase::EndStep);
  comms_.set_phase(Phase::EndStep);
  return report;
}

RunReport StepManager::run(std::uint64_t n_steps) {
  started_ = true;
  RunReport run_report;
  for (std::uint64_t step = 0; step < n_steps; ++step) {
    StepReport sr = run_step(step);

    double vis = 0.0, compute = 0.0;
    // Split declared callback cost by client flag.
    for (const auto& [phase, slots] : slots_) {
      for (const Slot& s : slots) {
        if (!s.reg.filter.matches(step)) continue;
        if (clients_[s.client_id].is_visualization)
          vis += s.reg.declared_cost_us;
        else
          compute += s.reg.declared_cost_us;
      }
    }
    double comm = sr.delivery.comm_cost_us;
    if (overlap_credit_) {
      // PreWait compute proceeds while transfers are in flight; credit the
      // overlapped part against the step total.
      double prewait = 0.0;
      auto it = sr.phase_time_us.find(Phase::PreWait);
      if (it != sr.phase_time_us.end()) prewait = it->second;
      run_report.total_us -= std::min(prewait, comm);
    }
    run_report.total_us += comm + compute + vis;
    run_report.comm_us += comm;
    run_report.compute_us += compute;
    run_report.vis_us += vis;
    run_report.sync_points += sr.delivery.sync_points_used;
    run_report.messages_sent += sr.delivery.messages_sent;
    run_report.bytes_on_wire += sr.delivery.bytes_on_wire;
    run_report.steps_run += 1;
    run_report.step_reports.push_back(std::move(sr));
  }
  return run_report;
}

}  // namespace coalesce
