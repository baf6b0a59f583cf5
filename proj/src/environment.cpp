#include "cbm/environment.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "cbm/errors.hpp"

namespace cbm {

std::string_view to_string(Action a) {
  switch (a) {
    case Action::NoAction: return "a0";
    case Action::Repair: return "a1";
    case Action::Replace: return "a2";
  }
  return "?";
}

std::string_view to_string(MaintenanceEvent e) {
  switch (e) {
    case MaintenanceEvent::None: return "none";
    case MaintenanceEvent::Repair: return "repair";
    case MaintenanceEvent::PreventiveReplacement: return "preventive_replacement";
    case MaintenanceEvent::CorrectiveReplacement: return "corrective_replacement";
  }
  return "?";
}

void CostParams::validate() const {
  if (!(c_p >= 0.0) || !(c_r >= 0.0) || !(c_down >= 0.0)) {
    throw ParameterError("costs must be non-negative");
  }
  if (!(failure_threshold > 0.0) || !std::isfinite(failure_threshold)) {
    throw ParameterError("failure threshold must be positive");
  }
}

void MaintenanceModel::validate() const {
  process.validate();
  costs.validate();
}

double reward(Action action, double x_pre, const CostParams& costs) {
  if (x_pre >= costs.failure_threshold) {
    // Any request at a failed inspection is executed as a corrective replacement.
    return -costs.c_r - costs.c_down;
  }
  switch (action) {
    case Action::NoAction: return 0.0;
    case Action::Repair: return -costs.c_p;
    case Action::Replace: return -costs.c_r;
  }
  throw ParameterError("unknown action");
}

SystemState apply_repair(const SystemState& s, RngStream& rng, RepairSpread spread) {
  if (!(s.x_m >= 0.0) || !(s.x_m <= s.x)) {
    throw ParameterError("state invariant 0 <= x_m <= x violated");
  }
  if (s.x_m == s.x) return s;
  TruncNormalParams tn;
  tn.mu = 0.5 * (s.x_m + s.x);
  tn.sigma = spread == RepairSpread::SumOverSix ? (s.x_m + s.x) / 6.0 : (s.x - s.x_m) / 6.0;
  tn.lower = s.x_m;
  tn.upper = s.x;
  const double repaired = sample_trunc_normal(tn, rng);
  return {repaired, repaired};
}

StepOutcome step(const SystemState& s, Action requested, const MaintenanceModel& model,
                 RngStream& degradation, RngStream& repairs) {
  if (!(s.x_m >= 0.0) || !(s.x_m <= s.x)) {
    throw ParameterError("state invariant 0 <= x_m <= x violated");
  }
  StepOutcome out;
  out.pre_state = s;
  out.requested = requested;

  if (s.x >= model.costs.failure_threshold) {
    out.executed = Action::Replace;
    out.event = MaintenanceEvent::CorrectiveReplacement;
    out.post_maintenance = {};
  } else {
    out.executed = requested;
    switch (requested) {
      case Action::NoAction:
        out.post_maintenance = s;
        break;
      case Action::Repair:
        out.event = MaintenanceEvent::Repair;
        out.post_maintenance = apply_repair(s, repairs, model.spread);
        break;
      case Action::Replace:
        out.event = MaintenanceEvent::PreventiveReplacement;
        out.post_maintenance = {};
        break;
    }
  }
  out.reward = reward(out.executed, s.x, model.costs);

  const double increment = sample_increment(model.process, degradation);
  out.next_state = {out.post_maintenance.x + increment, out.post_maintenance.x_m};
  return out;
}

StepOutcome step(const SystemState& s, Action requested, const MaintenanceModel& model,
                 RngStream& rng) {
  return step(s, requested, model, rng, rng);
}

MaintenanceEnv::MaintenanceEnv(MaintenanceModel model, RngStream degradation, RngStream repairs)
    : model_(model), degradation_(degradation), repairs_(repairs) {
  model_.validate();
}

void MaintenanceEnv::reset() { ctx_ = DecisionContext{}; }

StepOutcome MaintenanceEnv::advance(Action requested) {
  StepOutcome out = step(ctx_.state, requested, model_, degradation_, repairs_);
  ctx_.state = out.next_state;
  ++ctx_.step;
  if (out.executed == Action::Replace) {
    ctx_.steps_since_replacement = 0;
    ctx_.steps_since_repair = 0;
  } else if (out.executed == Action::Repair) {
    ctx_.steps_since_repair = 0;
  }
  ++ctx_.steps_since_replacement;
  ++ctx_.steps_since_repair;
  return out;
}

std::vector<StepOutcome> run_episode(const Policy& policy, int length, MaintenanceEnv& env) {
  if (length < 1) throw ParameterError("episode length must be at least 1");
  env.reset();
  std::vector<StepOutcome> trace;
  trace.reserve(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    trace.push_back(env.advance(policy(env.context())));
  }
  return trace;
}

std::vector<StepOutcome> run_episode(const Policy& policy, int length,
                                     const MaintenanceModel& model, RngStream degradation,
                                     RngStream repairs) {
  MaintenanceEnv env(model, degradation, repairs);
  return run_episode(policy, length, env);
}

void write_trace_csv(std::ostream& out, const std::vector<StepOutcome>& trace) {
  out << "step,x_pre,x_m_pre,requested_action,executed_action,reward,event,x_post\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& o = trace[i];
    out << i << ',' << o.pre_state.x << ',' << o.pre_state.x_m << ',' << to_string(o.requested)
        << ',' << to_string(o.executed) << ',' << o.reward << ',' << to_string(o.event) << ','
        << o.post_maintenance.x << '\n';
  }
  out.precision(old_precision);
}

}  // namespace cbm
