#pragma once

#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "cbm/gamma_process.hpp"
#include "cbm/random.hpp"

namespace cbm {

/// Deterioration at the current inspection and right after the last maintenance.
struct SystemState {
  double x = 0.0;
  double x_m = 0.0;

  bool operator==(const SystemState&) const = default;
};

enum class Action : int {
  NoAction = 0,
  Repair = 1,
  Replace = 2,
};

inline constexpr int kNumActions = 3;

enum class MaintenanceEvent {
  None,
  Repair,
  PreventiveReplacement,
  CorrectiveReplacement,
};

std::string_view to_string(Action a);
std::string_view to_string(MaintenanceEvent e);

struct CostParams {
  double c_p = 600.0;
  double c_r = 3500.0;
  double c_down = 2000.0;
  double failure_threshold = 8.0;

  void validate() const;
};

/// How the spread of the post-repair truncated normal is derived.
enum class RepairSpread {
  SumOverSix,    // sigma = (x_m + x) / 6
  WidthOverSix,  // sigma = (x - x_m) / 6
};

struct MaintenanceModel {
  GammaProcessParams process;
  CostParams costs;
  RepairSpread spread = RepairSpread::SumOverSix;

  void validate() const;
};

struct StepOutcome {
  SystemState pre_state;
  Action requested = Action::NoAction;
  Action executed = Action::NoAction;
  double reward = 0.0;
  MaintenanceEvent event = MaintenanceEvent::None;
  SystemState post_maintenance;
  SystemState next_state;
};

/// Signed reward for taking `action` when the inspected deterioration is `x_pre`.
/// NoAction/Repair at or above the threshold never reach here through step().
double reward(Action action, double x_pre, const CostParams& costs);

/// Imperfect repair with memory: the post-repair level is drawn from a normal
/// truncated to [x_m, x] centred on the interval midpoint and becomes the new x_m.
SystemState apply_repair(const SystemState& s, RngStream& rng,
                         RepairSpread spread = RepairSpread::SumOverSix);

/// One inspection epoch: maintenance (with forced corrective replacement at or
/// above the failure threshold) followed by one interval of degradation.
/// Increments come from `degradation`, repair outcomes from `repairs`, so two
/// policies sharing streams see the same degradation path.
StepOutcome step(const SystemState& s, Action requested, const MaintenanceModel& model,
                 RngStream& degradation, RngStream& repairs);
StepOutcome step(const SystemState& s, Action requested, const MaintenanceModel& model,
                 RngStream& rng);

/// What a policy may look at when deciding.
struct DecisionContext {
  SystemState state;
  int step = 0;
  int steps_since_repair = 0;       // reset by any maintenance action
  int steps_since_replacement = 0;  // reset by replacement only
};

using Policy = std::function<Action(const DecisionContext&)>;

/// Stateful wrapper around step() that tracks the policy counters.
class MaintenanceEnv {
 public:
  MaintenanceEnv(MaintenanceModel model, RngStream degradation, RngStream repairs);

  void reset();
  StepOutcome advance(Action requested);

  const DecisionContext& context() const noexcept { return ctx_; }
  const SystemState& state() const noexcept { return ctx_.state; }
  const MaintenanceModel& model() const noexcept { return model_; }

 private:
  MaintenanceModel model_;
  RngStream degradation_;
  RngStream repairs_;
  DecisionContext ctx_;
};

std::vector<StepOutcome> run_episode(const Policy& policy, int length, MaintenanceEnv& env);
std::vector<StepOutcome> run_episode(const Policy& policy, int length,
                                     const MaintenanceModel& model, RngStream degradation,
                                     RngStream repairs);

/// CSV with columns step,x_pre,x_m_pre,requested_action,executed_action,reward,event,x_post
/// where x_post is the deterioration right after maintenance.
void write_trace_csv(std::ostream& out, const std::vector<StepOutcome>& trace);

}  // namespace cbm
